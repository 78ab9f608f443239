#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "causeway/variable.hpp"

namespace causeway {

/// Ordered variable list with unique names.
class Schema {
public:
    Schema() = default;
    /// Throws DuplicateVariable.
    explicit Schema(std::vector<Variable> variables);

    const std::vector<Variable>& variables() const noexcept { return variables_; }
    std::size_t size() const noexcept { return variables_.size(); }
    const Variable& variable(std::size_t i) const { return variables_.at(i); }
    const Variable& variable(std::string_view name) const { return variables_[index_of(name)]; }
    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws UnknownVariable.
    std::size_t index_of(std::string_view name) const;

    friend bool operator==(const Schema& a, const Schema& b) { return a.variables_ == b.variables_; }

private:
    std::vector<Variable> variables_;
    std::unordered_map<std::string, std::size_t> index_;
};

using LevelCode = std::uint16_t;

/// Immutable categorical observations, stored row-major as level indices.
class DataTable {
public:
    DataTable() = default;
    /// Throws InvalidArgument if the cell count is not a multiple of the
    /// schema width or a code is out of range for its variable.
    DataTable(Schema schema, std::vector<LevelCode> cells);

    const Schema& schema() const noexcept { return schema_; }
    std::size_t row_count() const noexcept { return rows_; }
    std::size_t column_count() const noexcept { return schema_.size(); }
    LevelCode at(std::size_t row, std::size_t column) const { return cells_[row * schema_.size() + column]; }
    std::span<const LevelCode> row(std::size_t r) const {
        return {cells_.data() + r * schema_.size(), schema_.size()};
    }
    const std::vector<LevelCode>& cells() const noexcept { return cells_; }

    /// Rows in the given order (duplicates allowed).
    DataTable select_rows(std::span<const std::size_t> rows) const;
    /// Same data with `variable`'s reference level changed.
    DataTable with_reference(std::string_view variable, std::string_view level) const;

    friend bool operator==(const DataTable& a, const DataTable& b) {
        return a.schema_ == b.schema_ && a.cells_ == b.cells_;
    }

private:
    Schema schema_;
    std::vector<LevelCode> cells_;
    std::size_t rows_ = 0;
};

struct LoadOptions {
    /// Drop rows with empty cells instead of failing; the count is reported.
    bool drop_incomplete = false;
};

struct LoadResult {
    DataTable table;
    std::size_t dropped_rows = 0;
};

/// Comma-delimited text with a mandatory header naming every schema variable
/// (any order). Fields may be double-quoted. Columns are reordered to the
/// schema. Throws HeaderMismatch, UnknownLevel, MissingCell or ParseError with
/// the 1-based data row and column.
LoadResult load_table(std::istream& in, const Schema& schema, LoadOptions options = {});
LoadResult load_table_file(const std::string& path, const Schema& schema, LoadOptions options = {});

void write_table(std::ostream& out, const DataTable& table);
std::string table_to_csv(const DataTable& table);

/// Counts for one stratum of the conditioning variables.
struct ContingencyTable {
    std::string x;
    std::string y;
    std::vector<std::pair<std::string, std::string>> stratum;  // (variable, level), names sorted
    std::size_t x_levels = 0;
    std::size_t y_levels = 0;
    std::vector<std::uint64_t> counts;  // x-major

    std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * y_levels + j]; }
    std::uint64_t total() const;
};

/// One table per observed combination of `z` levels, ordered by the level
/// indices of the name-sorted conditioning variables. Throws UnknownVariable
/// or OverlappingRoles.
std::vector<ContingencyTable> stratified_counts(const DataTable& table, std::string_view x,
                                                std::string_view y, const std::vector<std::string>& z);

}  // namespace causeway
