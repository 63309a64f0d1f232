#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace dsb::tabular {

enum class ColumnKind { numeric, integer, categorical };

const char* kind_name(ColumnKind k);
ColumnKind kind_from_name(const std::string& name);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> categories;  // categorical only, ordered and duplicate-free
};

/// Mixed-type table. Cells are stored as doubles: integer columns hold exactly
/// representable integers, categorical columns hold the 0-based category index.
struct Dataset {
    std::vector<ColumnSpec> columns;
    std::size_t target = 0;   // index of the target column, kind must be numeric
    Eigen::MatrixXd cells;    // n x columns.size()

    std::size_t n() const { return static_cast<std::size_t>(cells.rows()); }
    std::size_t feature_count() const { return columns.empty() ? 0 : columns.size() - 1; }
};

/// Throws std::invalid_argument if any Dataset invariant is violated.
void validate(const Dataset& ds);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows);
Dataset concat(const Dataset& a, const Dataset& b);

enum class FeatureRole { standardized_numeric, one_hot_level };

struct EncodedFeature {
    std::size_t source_column = 0;  // index into the fitted schema
    FeatureRole role = FeatureRole::standardized_numeric;
    std::size_t level = 0;          // category index for one-hot levels
    double mean = 0.0;              // standardization stats, numeric roles only
    double stddev = 1.0;
    bool constant = false;          // source column had zero variance on the fitting set
};

/// Fully numeric design matrix plus the fitted, invertible column mapping.
/// The mapping (schema, feature_map, target stats) is what apply/decode use;
/// `values`/`target_vector` hold the encoded fitting set.
struct EncodedMatrix {
    Eigen::MatrixXd values;         // n x d
    std::vector<EncodedFeature> feature_map;
    Eigen::VectorXd target_vector;  // standardized target of the fitting set
    double target_mean = 0.0;
    double target_stddev = 1.0;
    bool target_constant = false;

    std::vector<ColumnSpec> schema;  // includes the target column
    std::size_t target_column = 0;

    std::size_t dim() const { return feature_map.size(); }
};

struct ApplyResult {
    Eigen::MatrixXd values;
    Eigen::VectorXd target;  // standardized with the stored statistics
    std::vector<std::string> warnings;
};

/// Z-score standardization (population stddev) for numeric/integer columns,
/// one-hot expansion for categorical columns, separate standardization of the
/// target. Zero-variance columns encode as constant 0 with stddev recorded 1.
EncodedMatrix fit_encode(const Dataset& ds);

/// Encodes `ds` with the statistics stored in `em` (no refit). A category
/// unseen at fit time produces an all-zero one-hot group and a warning.
ApplyResult apply_encode(const EncodedMatrix& em, const Dataset& ds);

/// Inverse mapping: de-standardizes numeric columns, rounds integer columns
/// half-to-even, decodes one-hot groups by argmax (ties to the lowest
/// category index). Throws on non-finite input, naming the cell.
Dataset decode(const EncodedMatrix& em, const Eigen::MatrixXd& values,
               const Eigen::VectorXd& target);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // length n, fold index per row
    std::uint64_t rng_seed = 0;

    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> complement_rows(std::size_t fold) const;
};

/// Uniform random partition into k folds whose sizes differ by at most one.
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed);

struct SchemaFile {
    std::vector<ColumnSpec> columns;
    std::string target;
};

SchemaFile read_schema_file(const std::string& path);
SchemaFile schema_from_json(const std::string& json_text);
std::string schema_to_json(const std::vector<ColumnSpec>& columns, const std::string& target);
void write_schema_file(const std::string& path, const Dataset& ds);

/// CSV ingestion. Header must match schema names in order; categorical cells
/// are validated against fixed categories, or categories are inferred in
/// first-appearance order when the schema leaves them empty.
Dataset load_csv(const std::string& path, std::vector<ColumnSpec> schema,
                 const std::string& target);

/// CSV output with the same header order the dataset was loaded with.
void write_csv(const std::string& path, const Dataset& ds);
std::string to_csv(const Dataset& ds);

/// Shortest round-trip decimal form of a double (locale-independent).
std::string format_double(double v);

}  // namespace dsb::tabular
