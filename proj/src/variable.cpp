#include "causeway/variable.hpp"

#include <algorithm>
#include <set>

#include "causeway/error.hpp"

namespace causeway {

namespace {
bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}
}  // namespace

bool is_valid_name(std::string_view name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), is_name_char);
}

bool is_valid_level(std::string_view level) {
    return !level.empty() && std::all_of(level.begin(), level.end(), [](char c) {
        return is_name_char(c) || c == '-' || c == '.';
    });
}

Variable::Variable(std::string name, std::vector<std::string> levels, std::string reference_level)
    : name_(std::move(name)), levels_(std::move(levels)) {
    if (!is_valid_name(name_)) {
        throw Error(ErrorCode::InvalidVariable, "invalid variable name '" + name_ + "'");
    }
    if (levels_.size() < 2) {
        throw Error(ErrorCode::InvalidVariable, "variable " + name_ + " needs at least two levels");
    }
    std::set<std::string_view> seen;
    for (const auto& l : levels_) {
        if (!is_valid_level(l)) {
            throw Error(ErrorCode::InvalidVariable,
                        "variable " + name_ + " has invalid level '" + l + "'");
        }
        if (!seen.insert(l).second) {
            throw Error(ErrorCode::InvalidVariable,
                        "variable " + name_ + " repeats level '" + l + "'");
        }
    }
    auto ref = find_level(reference_level);
    if (!ref) {
        throw Error(ErrorCode::InvalidVariable, "reference level '" + reference_level +
                                                    "' is not a level of " + name_);
    }
    reference_ = *ref;
}

Variable::Variable(std::string name, std::vector<std::string> levels)
    : Variable(std::move(name), levels, levels.empty() ? std::string{} : levels.front()) {}

std::optional<std::size_t> Variable::find_level(std::string_view level) const {
    auto it = std::find(levels_.begin(), levels_.end(), level);
    if (it == levels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - levels_.begin());
}

std::size_t Variable::level_index(std::string_view level) const {
    auto idx = find_level(level);
    if (!idx) {
        throw Error(ErrorCode::UnknownLevel,
                    "'" + std::string(level) + "' is not a level of " + name_);
    }
    return *idx;
}

Variable Variable::with_reference(std::string_view level) const {
    Variable copy = *this;
    copy.reference_ = level_index(level);
    return copy;
}

}  // namespace causeway
