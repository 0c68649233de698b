#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include <json.hpp>

namespace phri::est {

/// Base64 of the raw little-endian float64 bytes.
std::string encode_doubles(const double* data, std::size_t n);
std::vector<double> decode_doubles(const std::string& text);

/// {"rows", "cols", "data"} with column-major base64 payload.
nlohmann::json encode_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_matrix(const nlohmann::json& j);

nlohmann::json encode_vector(const std::vector<double>& v);
std::vector<double> decode_vector(const nlohmann::json& j);

}  // namespace phri::est
