#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace retenta {

// One customer row of customers.csv. Demographic, transactional and NPS
// fields; churn_label is only present on training data.
struct CustomerRecord {
    std::string customer_id;
    double age = 0.0;                     // years
    std::string region;                   // categorical code
    double tenure_days = 0.0;
    double order_count = 0.0;
    double total_spend = 0.0;             // currency units
    double days_since_last_order = 0.0;
    double purchase_interval_mean = 0.0;  // days
    double nps = 0.0;                     // 0..10
    std::optional<int> churn_label;       // 1 = churned
    std::optional<std::string> churn_reason;

    bool operator==(const CustomerRecord&) const = default;
};

struct CustomerTable {
    std::vector<CustomerRecord> rows;
    bool has_churn_label = false;
    bool has_churn_reason = false;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
    bool operator==(const CustomerTable&) const = default;
};

// Required columns of customers.csv, in file order.
const std::vector<std::string>& default_customer_schema();

// Numeric columns usable as features, in file order.
const std::vector<std::string>& numeric_customer_columns();

bool is_numeric_column(std::string_view name);
bool is_categorical_column(std::string_view name);

std::optional<double> numeric_field(const CustomerRecord& row, std::string_view column);
std::optional<std::string> categorical_field(const CustomerRecord& row, std::string_view column);

// Throws MissingColumn, DuplicateId, NonNumericField or OutOfRange naming the
// offending line and column. Optional columns churn_label and churn_reason
// are picked up when present in the header.
CustomerTable load_customers(const std::filesystem::path& path,
                             const std::vector<std::string>& schema = default_customer_schema());

void write_customers(const CustomerTable& table, const std::filesystem::path& path);

// Checks every record invariant; throws the same errors as load_customers.
void validate(const CustomerTable& table);

// Dense row-major matrix with named columns and customer-id rows.
struct FeatureMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;
    std::vector<std::string> column_names;
    std::vector<std::string> row_ids;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols);

    double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * n_cols, n_cols}; }
    std::span<double> row(std::size_t r) { return {values.data() + r * n_cols, n_cols}; }

    bool operator==(const FeatureMatrix&) const = default;
};

// Expands a feature spec into concrete column names. Numeric columns map to
// themselves; categorical columns become "name=category" one-hot columns in
// lexical category order. Entries already of the form "name=category" pass
// through. Throws UnknownColumn.
std::vector<std::string> expand_feature_spec(const CustomerTable& table,
                                             const std::vector<std::string>& spec);

// Builds the matrix for already-expanded column names.
FeatureMatrix materialize_columns(const CustomerTable& table,
                                  const std::vector<std::string>& expanded_columns);

FeatureMatrix build_feature_matrix(const CustomerTable& table, const std::vector<std::string>& spec);

// Every feature column a customers.csv table offers: numeric columns then region.
std::vector<std::string> default_feature_spec();

struct ScalingParams {
    std::vector<double> mean;
    std::vector<double> sd;       // sample standard deviation (n - 1)
    std::vector<bool> constant;   // zero-variance columns, scaled to 0

    std::size_t size() const noexcept { return mean.size(); }
    bool operator==(const ScalingParams&) const = default;
};

// Throws EmptyMatrix for a matrix without rows or columns.
std::pair<FeatureMatrix, ScalingParams> standardize(const FeatureMatrix& m);

// Applies an existing scaling. Throws DimensionMismatch.
FeatureMatrix apply_scaling(const FeatureMatrix& m, const ScalingParams& params);

// Inverse affine map; constant columns come back as their mean.
FeatureMatrix unstandardize(const FeatureMatrix& m, const ScalingParams& params);

using OfferRatings = std::map<std::string, double>;  // offer_id -> rating

// Sparse customer x offer ratings on the [1, 5] scale.
class RatingsMatrix {
public:
    static constexpr double kMinRating = 1.0;
    static constexpr double kMaxRating = 5.0;

    // Throws DuplicatePair or RatingOutOfRange.
    void add(const std::string& customer_id, const std::string& offer_id, double rating);

    void add_offer(const std::string& offer_id) { catalog_.insert(offer_id); }

    // Ratings of one customer; empty when the customer rated nothing.
    const OfferRatings& of(const std::string& customer_id) const;

    std::optional<double> get(const std::string& customer_id, const std::string& offer_id) const;

    const std::set<std::string>& catalog() const noexcept { return catalog_; }
    const std::map<std::string, OfferRatings>& by_customer() const noexcept { return by_customer_; }
    std::size_t entry_count() const noexcept { return entries_; }

    bool operator==(const RatingsMatrix&) const = default;

private:
    std::map<std::string, OfferRatings> by_customer_;
    std::set<std::string> catalog_;
    std::size_t entries_ = 0;
};

// Reads customer_id,offer_id,rating. Throws MissingColumn, NonNumericField,
// DuplicatePair, RatingOutOfRange.
RatingsMatrix load_ratings(const std::filesystem::path& path);

void write_ratings(const RatingsMatrix& ratings, const std::filesystem::path& path);

}  // namespace retenta
