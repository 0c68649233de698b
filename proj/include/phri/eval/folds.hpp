#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "phri/core/trial_log.hpp"

namespace phri::eval {

enum class FoldCategory { Subject, Distance, Corner, IoD };

FoldCategory parse_fold_category(std::string_view s);
std::string_view to_string(FoldCategory c);

/// Value of a manifest entry for a category, as a stable string key.
std::string category_value(const ManifestEntry& e, FoldCategory c);

struct Fold {
    std::string value;             // held-out category value
    std::vector<std::size_t> train;  // manifest row indices
    std::vector<std::size_t> test;
};

/// One fold per distinct category value (sorted); that value's trials form the
/// test set. Throws ConfigError when the category has fewer than two values.
std::vector<Fold> make_folds(const Manifest& manifest, FoldCategory category);

}  // namespace phri::eval
