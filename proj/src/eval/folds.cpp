#include "phri/eval/folds.hpp"

#include <algorithm>
#include <map>

#include "phri/core/errors.hpp"
#include "phri/core/numfmt.hpp"

namespace phri::eval {

FoldCategory parse_fold_category(std::string_view s) {
    s = trim(s);
    if (s == "subject") return FoldCategory::Subject;
    if (s == "distance" || s == "lp") return FoldCategory::Distance;
    if (s == "corner") return FoldCategory::Corner;
    if (s == "iod" || s == "IoD") return FoldCategory::IoD;
    throw ConfigError("unknown cross-validation category: " + std::string(s));
}

std::string_view to_string(FoldCategory c) {
    switch (c) {
        case FoldCategory::Subject: return "subject";
        case FoldCategory::Distance: return "distance";
        case FoldCategory::Corner: return "corner";
        case FoldCategory::IoD: return "iod";
    }
    return "?";
}

std::string category_value(const ManifestEntry& e, FoldCategory c) {
    switch (c) {
        case FoldCategory::Subject: return e.subject;
        case FoldCategory::Distance: return format_double(e.lp);
        case FoldCategory::Corner: return std::to_string(e.corner);
        case FoldCategory::IoD: return format_double(e.iod);
    }
    return {};
}

std::vector<Fold> make_folds(const Manifest& manifest, FoldCategory category) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        groups[category_value(manifest.entries[i], category)].push_back(i);
    if (groups.size() < 2)
        throw ConfigError("category '" + std::string(to_string(category)) + "' has fewer than two values");
    std::vector<Fold> folds;
    for (const auto& [value, test] : groups) {
        Fold f;
        f.value = value;
        f.test = test;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i)
            if (!std::binary_search(test.begin(), test.end(), i)) f.train.push_back(i);
        folds.push_back(std::move(f));
    }
    return folds;
}

}  // namespace phri::eval
