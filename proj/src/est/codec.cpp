#include "phri/est/codec.hpp"

#include <bit>
#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <cstring>

#include "phri/core/errors.hpp"

namespace phri::est {

static_assert(std::endian::native == std::endian::little, "artifact payloads assume a little-endian host");

namespace it = boost::archive::iterators;

std::string encode_doubles(const double* data, std::size_t n) {
    using Enc = it::base64_from_binary<it::transform_width<const char*, 6, 8>>;
    const auto* bytes = reinterpret_cast<const char*>(data);
    const std::size_t len = n * sizeof(double);
    std::string out(Enc(bytes), Enc(bytes + len));
    out.append((3 - len % 3) % 3, '=');
    return out;
}

std::vector<double> decode_doubles(const std::string& text) {
    using Dec = it::transform_width<it::binary_from_base64<std::string::const_iterator>, 8, 6>;
    std::string body = text;
    std::size_t pad = 0;
    while (!body.empty() && body.back() == '=') {
        body.pop_back();
        ++pad;
    }
    std::string bytes;
    try {
        bytes.assign(Dec(body.cbegin()), Dec(body.cend()));
    } catch (const std::exception& e) {
        throw FormatError(std::string("malformed base64 payload: ") + e.what());
    }
    const std::size_t len = (body.size() * 6) / 8;
    bytes.resize(len);
    if (len % sizeof(double) != 0) throw FormatError("base64 payload is not a whole number of float64 values");
    std::vector<double> out(len / sizeof(double));
    std::memcpy(out.data(), bytes.data(), len);
    (void)pad;
    return out;
}

nlohmann::json encode_matrix(const Eigen::MatrixXd& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_doubles(m.data(), static_cast<std::size_t>(m.size()))}};
}

Eigen::MatrixXd decode_matrix(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<long>();
    const auto cols = j.at("cols").get<long>();
    const auto v = decode_doubles(j.at("data").get<std::string>());
    if (static_cast<long>(v.size()) != rows * cols) throw FormatError("matrix payload size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

nlohmann::json encode_vector(const std::vector<double>& v) { return encode_doubles(v.data(), v.size()); }

std::vector<double> decode_vector(const nlohmann::json& j) { return decode_doubles(j.get<std::string>()); }

}  // namespace phri::est
