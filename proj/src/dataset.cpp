#include "causeway/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "causeway/error.hpp"

namespace causeway {

Schema::Schema(std::vector<Variable> variables) : variables_(std::move(variables)) {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (!index_.emplace(variables_[i].name(), i).second) {
            throw Error(ErrorCode::DuplicateVariable, "schema repeats variable " + variables_[i].name());
        }
    }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Schema::index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) throw Error(ErrorCode::UnknownVariable, "variable '" + std::string(name) + "' not in schema");
    return *i;
}

DataTable::DataTable(Schema schema, std::vector<LevelCode> cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
    const auto w = schema_.size();
    if (w == 0) {
        if (!cells_.empty()) throw Error(ErrorCode::InvalidArgument, "cells without schema");
        return;
    }
    if (cells_.size() % w != 0) throw Error(ErrorCode::InvalidArgument, "ragged cell buffer");
    rows_ = cells_.size() / w;
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (cells_[r * w + c] >= schema_.variable(c).level_count()) {
                throw Error(ErrorCode::UnknownLevel, "level code out of range", 0, r + 1, c + 1);
            }
        }
    }
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
    const auto w = schema_.size();
    DataTable out;
    out.schema_ = schema_;
    out.rows_ = rows.size();
    out.cells_.resize(rows.size() * w);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(rows[i] * w), w,
                    out.cells_.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    return out;
}

DataTable DataTable::with_reference(std::string_view variable, std::string_view level) const {
    auto vars = schema_.variables();
    auto i = schema_.index_of(variable);
    vars[i] = vars[i].with_reference(level);
    DataTable out;
    out.schema_ = Schema(std::move(vars));
    out.cells_ = cells_;
    out.rows_ = rows_;
    return out;
}

namespace {

// Splits one delimited record; quotes may span lines. Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::vector<bool>& quoted) {
    fields.clear();
    quoted.clear();
    std::string field;
    bool in_quotes = false;
    bool was_quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            quoted.push_back(was_quoted);
            field.clear();
            was_quoted = false;
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    quoted.push_back(was_quoted);
    return true;
}

std::string trim_copy(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool blank_record(const std::vector<std::string>& fields) {
    return fields.size() == 1 && trim_copy(fields[0]).empty();
}

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& s) {
    if (!needs_quotes(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

}  // namespace

LoadResult load_table(std::istream& in, const Schema& schema, LoadOptions options) {
    std::vector<std::string> fields;
    std::vector<bool> quoted;
    while (true) {
        if (!read_record(in, fields, quoted)) {
            throw Error(ErrorCode::HeaderMismatch, "empty input: header row is mandatory");
        }
        if (!blank_record(fields)) break;
    }
    const auto w = schema.size();
    // header position -> schema index
    std::vector<std::size_t> to_schema(fields.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        auto name = trim_copy(fields[i]);
        if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name = name.substr(3);
        auto idx = schema.find(name);
        if (!idx) throw Error(ErrorCode::HeaderMismatch, "header names unknown column '" + name + "'");
        if (!seen.insert(name).second) {
            throw Error(ErrorCode::HeaderMismatch, "header repeats column '" + name + "'");
        }
        to_schema[i] = *idx;
    }
    if (fields.size() != w) {
        for (const auto& v : schema.variables()) {
            if (!seen.count(v.name())) {
                throw Error(ErrorCode::HeaderMismatch, "header lacks schema variable '" + v.name() + "'");
            }
        }
    }

    LoadResult result;
    std::vector<LevelCode> cells;
    std::vector<LevelCode> row(w);
    std::size_t row_no = 0;
    while (read_record(in, fields, quoted)) {
        if (blank_record(fields)) continue;
        ++row_no;
        if (fields.size() != w) {
            throw Error(ErrorCode::ParseError,
                        "expected " + std::to_string(w) + " fields, found " + std::to_string(fields.size()),
                        0, row_no);
        }
        bool incomplete = false;
        for (std::size_t i = 0; i < w; ++i) {
            auto value = quoted[i] ? fields[i] : trim_copy(fields[i]);
            if (value.empty()) {
                if (options.drop_incomplete) {
                    incomplete = true;
                    break;
                }
                throw Error(ErrorCode::MissingCell,
                            "empty cell for " + schema.variable(to_schema[i]).name(), 0, row_no, i + 1);
            }
            const auto& var = schema.variable(to_schema[i]);
            auto level = var.find_level(value);
            if (!level) {
                throw Error(ErrorCode::UnknownLevel,
                            "'" + value + "' is not a level of " + var.name(), 0, row_no, i + 1);
            }
            row[to_schema[i]] = static_cast<LevelCode>(*level);
        }
        if (incomplete) {
            ++result.dropped_rows;
            continue;
        }
        cells.insert(cells.end(), row.begin(), row.end());
    }
    result.table = DataTable(schema, std::move(cells));
    return result;
}

LoadResult load_table_file(const std::string& path, const Schema& schema, LoadOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return load_table(in, schema, options);
}

void write_table(std::ostream& out, const DataTable& table) {
    const auto& s = table.schema();
    for (std::size_t c = 0; c < s.size(); ++c) {
        if (c) out << ',';
        write_field(out, s.variable(c).name());
    }
    out << '\n';
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t c = 0; c < s.size(); ++c) {
            if (c) out << ',';
            write_field(out, s.variable(c).level(table.at(r, c)));
        }
        out << '\n';
    }
}

std::string table_to_csv(const DataTable& table) {
    std::ostringstream out;
    write_table(out, table);
    return out.str();
}

std::uint64_t ContingencyTable::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<ContingencyTable> stratified_counts(const DataTable& table, std::string_view x,
                                                std::string_view y, const std::vector<std::string>& z) {
    const auto& s = table.schema();
    const auto xi = s.index_of(x);
    const auto yi = s.index_of(y);
    std::vector<std::string> zs = z;
    std::sort(zs.begin(), zs.end());
    std::vector<std::size_t> zi;
    for (const auto& n : zs) zi.push_back(s.index_of(n));
    std::set<std::size_t> roles{xi, yi};
    roles.insert(zi.begin(), zi.end());
    if (roles.size() != zi.size() + 2) {
        throw Error(ErrorCode::OverlappingRoles, "x, y and the conditioning set must be disjoint");
    }

    const auto nx = s.variable(xi).level_count();
    const auto ny = s.variable(yi).level_count();
    std::map<std::vector<LevelCode>, std::vector<std::uint64_t>> strata;
    std::vector<LevelCode> key(zi.size());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t k = 0; k < zi.size(); ++k) key[k] = table.at(r, zi[k]);
        auto& counts = strata[key];
        if (counts.empty()) counts.assign(nx * ny, 0);
        ++counts[table.at(r, xi) * ny + table.at(r, yi)];
    }
    if (strata.empty() && zi.empty()) strata[key].assign(nx * ny, 0);

    std::vector<ContingencyTable> out;
    out.reserve(strata.size());
    for (auto& [k, counts] : strata) {
        ContingencyTable t;
        t.x = std::string(x);
        t.y = std::string(y);
        for (std::size_t i = 0; i < zi.size(); ++i) {
            t.stratum.emplace_back(zs[i], s.variable(zi[i]).level(k[i]));
        }
        t.x_levels = nx;
        t.y_levels = ny;
        t.counts = std::move(counts);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace causeway
