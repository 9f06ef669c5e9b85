#include "retenta/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "retenta/csv.hpp"
#include "retenta/error.hpp"

namespace retenta {

namespace {

using NumericMember = double CustomerRecord::*;

struct NumericColumn {
    std::string_view name;
    NumericMember member;
};

constexpr NumericColumn kNumericColumns[] = {
    {"age", &CustomerRecord::age},
    {"tenure_days", &CustomerRecord::tenure_days},
    {"order_count", &CustomerRecord::order_count},
    {"total_spend", &CustomerRecord::total_spend},
    {"days_since_last_order", &CustomerRecord::days_since_last_order},
    {"purchase_interval_mean", &CustomerRecord::purchase_interval_mean},
    {"nps", &CustomerRecord::nps},
};

std::optional<NumericMember> numeric_member(std::string_view name) {
    for (const auto& col : kNumericColumns) {
        if (col.name == name) return col.member;
    }
    return std::nullopt;
}

std::string where(const std::filesystem::path& path, std::size_t line, std::string_view column) {
    return path.string() + " line " + std::to_string(line) + ", column '" + std::string(column) + "'";
}

void check_record(const CustomerRecord& r, const std::string& location) {
    if (r.customer_id.empty()) {
        throw Error(ErrorCode::OutOfRange, location + ": customer_id must be non-empty");
    }
    for (const auto& col : kNumericColumns) {
        if (!std::isfinite(r.*col.member)) {
            throw Error(ErrorCode::NonNumericField,
                        location + ": " + std::string(col.name) + " is not finite");
        }
    }
    if (r.nps < 0.0 || r.nps > 10.0) {
        throw Error(ErrorCode::OutOfRange,
                    location + ": nps = " + csv::format_double(r.nps) + " outside [0, 10]");
    }
    if (r.churn_label && *r.churn_label != 0 && *r.churn_label != 1) {
        throw Error(ErrorCode::OutOfRange, location + ": churn_label must be 0 or 1");
    }
}

}  // namespace

const std::vector<std::string>& default_customer_schema() {
    static const std::vector<std::string> schema = {
        "customer_id", "age",         "region",
        "tenure_days", "order_count", "total_spend",
        "days_since_last_order", "purchase_interval_mean", "nps",
    };
    return schema;
}

const std::vector<std::string>& numeric_customer_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> out;
        for (const auto& c : kNumericColumns) out.emplace_back(c.name);
        return out;
    }();
    return cols;
}

std::vector<std::string> default_feature_spec() {
    auto spec = numeric_customer_columns();
    spec.emplace_back("region");
    return spec;
}

bool is_numeric_column(std::string_view name) { return numeric_member(name).has_value(); }

bool is_categorical_column(std::string_view name) {
    return name == "region" || name == "churn_reason";
}

std::optional<double> numeric_field(const CustomerRecord& row, std::string_view column) {
    if (auto m = numeric_member(column)) return row.**m;
    return std::nullopt;
}

std::optional<std::string> categorical_field(const CustomerRecord& row, std::string_view column) {
    if (column == "region") return row.region;
    if (column == "churn_reason") return row.churn_reason;
    return std::nullopt;
}

CustomerTable load_customers(const std::filesystem::path& path,
                             const std::vector<std::string>& schema) {
    const csv::Document doc = csv::read(path);

    std::vector<std::string> required = default_customer_schema();
    for (const auto& c : schema) {
        if (std::find(required.begin(), required.end(), c) == required.end()) required.push_back(c);
    }
    for (const auto& c : required) {
        if (!doc.column(c)) {
            throw Error(ErrorCode::MissingColumn, path.string() + ": missing column '" + c + "'");
        }
    }

    CustomerTable table;
    const auto label_col = doc.column("churn_label");
    const auto reason_col = doc.column("churn_reason");
    table.has_churn_label = label_col.has_value();
    table.has_churn_reason = reason_col.has_value();

    const std::size_t id_col = *doc.column("customer_id");
    const std::size_t region_col = *doc.column("region");
    std::vector<std::pair<std::size_t, NumericMember>> numeric_cols;
    for (const auto& c : kNumericColumns) numeric_cols.emplace_back(*doc.column(c.name), c.member);

    std::unordered_map<std::string, std::size_t> first_line;
    table.rows.reserve(doc.rows.size());
    for (const auto& row : doc.rows) {
        CustomerRecord rec;
        rec.customer_id = row.fields[id_col];
        if (rec.customer_id.empty()) {
            throw Error(ErrorCode::OutOfRange, where(path, row.line, "customer_id") + ": empty id");
        }
        if (auto [it, inserted] = first_line.emplace(rec.customer_id, row.line); !inserted) {
            throw Error(ErrorCode::DuplicateId,
                        where(path, row.line, "customer_id") + ": duplicate id '" +
                            rec.customer_id + "' (first seen on line " +
                            std::to_string(it->second) + ")");
        }
        rec.region = row.fields[region_col];
        for (const auto& [col, member] : numeric_cols) {
            const auto& text = row.fields[col];
            auto value = csv::parse_double(text);
            if (!value || !std::isfinite(*value)) {
                throw Error(ErrorCode::NonNumericField,
                            where(path, row.line, doc.header[col]) + ": '" + text +
                                "' is not a finite number");
            }
            rec.*member = *value;
        }
        if (label_col) {
            const auto& text = row.fields[*label_col];
            if (text == "0" || text == "1") {
                rec.churn_label = text == "1" ? 1 : 0;
            } else if (!text.empty()) {
                throw Error(ErrorCode::OutOfRange,
                            where(path, row.line, "churn_label") + ": '" + text + "' must be 0 or 1");
            }
        }
        if (reason_col) rec.churn_reason = row.fields[*reason_col];
        check_record(rec, path.string() + " line " + std::to_string(row.line));
        table.rows.push_back(std::move(rec));
    }
    return table;
}

void validate(const CustomerTable& table) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::string location = "record " + std::to_string(i);
        check_record(r, location);
        if (!seen.insert(r.customer_id).second) {
            throw Error(ErrorCode::DuplicateId, location + ": duplicate id '" + r.customer_id + "'");
        }
    }
}

void write_customers(const CustomerTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    const auto& schema = default_customer_schema();
    for (std::size_t i = 0; i < schema.size(); ++i) out << (i ? "," : "") << schema[i];
    if (table.has_churn_label) out << ",churn_label";
    if (table.has_churn_reason) out << ",churn_reason";
    out << '\n';
    for (const auto& r : table.rows) {
        out << csv::escape(r.customer_id);
        for (const auto& name : schema) {
            if (name == "customer_id") continue;
            out << ',';
            if (name == "region") {
                out << csv::escape(r.region);
            } else {
                out << csv::format_double(*numeric_field(r, name));
            }
        }
        if (table.has_churn_label) out << ',' << (r.churn_label ? std::to_string(*r.churn_label) : "");
        if (table.has_churn_reason) out << ',' << csv::escape(r.churn_reason.value_or(""));
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : n_rows(rows), n_cols(cols), values(rows * cols, 0.0), column_names(cols), row_ids(rows) {}

std::vector<std::string> expand_feature_spec(const CustomerTable& table,
                                             const std::vector<std::string>& spec) {
    std::vector<std::string> expanded;
    for (const auto& name : spec) {
        if (is_numeric_column(name)) {
            expanded.push_back(name);
            continue;
        }
        const auto eq = name.find('=');
        const std::string base = eq == std::string::npos ? name : name.substr(0, eq);
        if (!is_categorical_column(base)) {
            throw Error(ErrorCode::UnknownColumn, "unknown feature column '" + name + "'");
        }
        if (base == "churn_reason" && !table.has_churn_reason && !table.empty()) {
            throw Error(ErrorCode::UnknownColumn, "table has no churn_reason column");
        }
        if (eq != std::string::npos) {
            expanded.push_back(name);
            continue;
        }
        std::set<std::string> categories;
        for (const auto& r : table.rows) categories.insert(categorical_field(r, base).value_or(""));
        for (const auto& c : categories) expanded.push_back(base + "=" + c);
    }
    return expanded;
}

FeatureMatrix materialize_columns(const CustomerTable& table,
                                  const std::vector<std::string>& expanded_columns) {
    FeatureMatrix m(table.size(), expanded_columns.size());
    m.column_names = expanded_columns;
    for (std::size_t r = 0; r < table.size(); ++r) m.row_ids[r] = table.rows[r].customer_id;

    for (std::size_t c = 0; c < expanded_columns.size(); ++c) {
        const auto& name = expanded_columns[c];
        if (auto member = numeric_member(name)) {
            for (std::size_t r = 0; r < table.size(); ++r) m.at(r, c) = table.rows[r].**member;
            continue;
        }
        const auto eq = name.find('=');
        const std::string base = eq == std::string::npos ? name : name.substr(0, eq);
        if (eq == std::string::npos || !is_categorical_column(base)) {
            throw Error(ErrorCode::UnknownColumn, "unknown feature column '" + name + "'");
        }
        if (base == "churn_reason" && !table.has_churn_reason && !table.empty()) {
            throw Error(ErrorCode::UnknownColumn, "table has no churn_reason column");
        }
        const std::string category = name.substr(eq + 1);
        for (std::size_t r = 0; r < table.size(); ++r) {
            m.at(r, c) = categorical_field(table.rows[r], base).value_or("") == category ? 1.0 : 0.0;
        }
    }
    return m;
}

FeatureMatrix build_feature_matrix(const CustomerTable& table, const std::vector<std::string>& spec) {
    return materialize_columns(table, expand_feature_spec(table, spec));
}

std::pair<FeatureMatrix, ScalingParams> standardize(const FeatureMatrix& m) {
    if (m.n_rows == 0 || m.n_cols == 0) {
        throw Error(ErrorCode::EmptyMatrix, "cannot standardize an empty matrix");
    }
    ScalingParams params;
    params.mean.assign(m.n_cols, 0.0);
    params.sd.assign(m.n_cols, 0.0);
    params.constant.assign(m.n_cols, false);
    for (std::size_t c = 0; c < m.n_cols; ++c) {
        bool constant = true;
        double sum = 0.0;
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            sum += m.at(r, c);
            constant = constant && m.at(r, c) == m.at(0, c);
        }
        const double mean = sum / static_cast<double>(m.n_rows);
        double ss = 0.0;
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            const double d = m.at(r, c) - mean;
            ss += d * d;
        }
        params.mean[c] = constant ? m.at(0, c) : mean;
        params.constant[c] = constant || m.n_rows < 2;
        params.sd[c] = params.constant[c] ? 0.0 : std::sqrt(ss / static_cast<double>(m.n_rows - 1));
    }
    return {apply_scaling(m, params), std::move(params)};
}

FeatureMatrix apply_scaling(const FeatureMatrix& m, const ScalingParams& params) {
    if (params.size() != m.n_cols || params.sd.size() != m.n_cols ||
        params.constant.size() != m.n_cols) {
        throw Error(ErrorCode::DimensionMismatch,
                    "scaling has " + std::to_string(params.size()) + " columns, matrix has " +
                        std::to_string(m.n_cols));
    }
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        for (std::size_t c = 0; c < m.n_cols; ++c) {
            out.at(r, c) = params.constant[c] ? 0.0 : (m.at(r, c) - params.mean[c]) / params.sd[c];
        }
    }
    return out;
}

FeatureMatrix unstandardize(const FeatureMatrix& m, const ScalingParams& params) {
    if (params.size() != m.n_cols) {
        throw Error(ErrorCode::DimensionMismatch, "scaling/matrix column count differ");
    }
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        for (std::size_t c = 0; c < m.n_cols; ++c) {
            out.at(r, c) = params.constant[c] ? params.mean[c]
                                              : m.at(r, c) * params.sd[c] + params.mean[c];
        }
    }
    return out;
}

void RatingsMatrix::add(const std::string& customer_id, const std::string& offer_id, double rating) {
    if (!(rating >= kMinRating && rating <= kMaxRating)) {
        throw Error(ErrorCode::RatingOutOfRange, "rating " + csv::format_double(rating) + " for (" +
                                                     customer_id + ", " + offer_id +
                                                     ") outside [1, 5]");
    }
    auto& row = by_customer_[customer_id];
    if (!row.emplace(offer_id, rating).second) {
        throw Error(ErrorCode::DuplicatePair,
                    "duplicate rating for (" + customer_id + ", " + offer_id + ")");
    }
    catalog_.insert(offer_id);
    ++entries_;
}

const OfferRatings& RatingsMatrix::of(const std::string& customer_id) const {
    static const OfferRatings empty;
    auto it = by_customer_.find(customer_id);
    return it == by_customer_.end() ? empty : it->second;
}

std::optional<double> RatingsMatrix::get(const std::string& customer_id,
                                         const std::string& offer_id) const {
    const auto& row = of(customer_id);
    auto it = row.find(offer_id);
    if (it == row.end()) return std::nullopt;
    return it->second;
}

RatingsMatrix load_ratings(const std::filesystem::path& path) {
    const csv::Document doc = csv::read(path);
    std::size_t cols[3];
    const char* names[3] = {"customer_id", "offer_id", "rating"};
    for (int i = 0; i < 3; ++i) {
        auto c = doc.column(names[i]);
        if (!c) {
            throw Error(ErrorCode::MissingColumn,
                        path.string() + ": missing column '" + names[i] + "'");
        }
        cols[i] = *c;
    }
    RatingsMatrix ratings;
    for (const auto& row : doc.rows) {
        const auto& customer = row.fields[cols[0]];
        const auto& offer = row.fields[cols[1]];
        if (customer.empty() || offer.empty()) {
            throw Error(ErrorCode::OutOfRange,
                        path.string() + " line " + std::to_string(row.line) + ": empty id");
        }
        auto value = csv::parse_double(row.fields[cols[2]]);
        if (!value) {
            throw Error(ErrorCode::NonNumericField, where(path, row.line, "rating") + ": '" +
                                                        row.fields[cols[2]] + "' is not a number");
        }
        try {
            ratings.add(customer, offer, *value);
        } catch (const Error& e) {
            throw Error(e.code(), path.string() + " line " + std::to_string(row.line) + ": " +
                                      e.detail());
        }
    }
    return ratings;
}

void write_ratings(const RatingsMatrix& ratings, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "customer_id,offer_id,rating\n";
    for (const auto& [customer, row] : ratings.by_customer()) {
        for (const auto& [offer, rating] : row) {
            out << csv::escape(customer) << ',' << csv::escape(offer) << ','
                << csv::format_double(rating) << '\n';
        }
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace retenta
