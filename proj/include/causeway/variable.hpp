#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace causeway {

/// A categorical variable: a name, its ordered level set and the level used as
/// the baseline for contrasts.
class Variable {
public:
    /// Throws InvalidVariable when the name or levels are malformed, fewer than
    /// two levels are given, levels repeat, or the reference is not a level.
    Variable(std::string name, std::vector<std::string> levels, std::string reference_level);

    /// Reference defaults to the first level.
    Variable(std::string name, std::vector<std::string> levels);

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::string>& levels() const noexcept { return levels_; }
    std::size_t level_count() const noexcept { return levels_.size(); }
    std::size_t reference_index() const noexcept { return reference_; }
    const std::string& reference_level() const noexcept { return levels_[reference_]; }
    const std::string& level(std::size_t i) const { return levels_.at(i); }

    std::optional<std::size_t> find_level(std::string_view level) const;
    /// Throws UnknownLevel.
    std::size_t level_index(std::string_view level) const;

    /// Copy with a different reference level.
    Variable with_reference(std::string_view level) const;

    friend bool operator==(const Variable&, const Variable&) = default;

private:
    std::string name_;
    std::vector<std::string> levels_;
    std::size_t reference_ = 0;
};

/// Names: ASCII letters, digits and underscore. Levels additionally allow '-' and '.'.
bool is_valid_name(std::string_view name);
bool is_valid_level(std::string_view level);

}  // namespace causeway
