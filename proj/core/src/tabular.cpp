#include "dsb/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dsb/rng.hpp"

namespace dsb::tabular {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string cell_ref(std::size_t row, const std::string& col) {
    // data rows are reported 1-based, excluding the header
    return "row " + std::to_string(row + 1) + ", column '" + col + "'";
}

}  // namespace

const char* kind_name(ColumnKind k) {
    switch (k) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::integer: return "integer";
        case ColumnKind::categorical: return "categorical";
    }
    return "?";
}

ColumnKind kind_from_name(const std::string& name) {
    if (name == "numeric") return ColumnKind::numeric;
    if (name == "integer") return ColumnKind::integer;
    if (name == "categorical") return ColumnKind::categorical;
    throw std::invalid_argument("unknown column kind '" + name + "'");
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void validate(const Dataset& ds) {
    if (ds.columns.empty()) throw std::invalid_argument("dataset has no columns");
    if (ds.target >= ds.columns.size())
        throw std::invalid_argument("target index out of range");
    if (ds.columns[ds.target].kind != ColumnKind::numeric)
        throw std::invalid_argument("target column '" + ds.columns[ds.target].name +
                                    "' must be numeric");
    if (static_cast<std::size_t>(ds.cells.cols()) != ds.columns.size())
        throw std::invalid_argument("cell matrix width does not match column count");
    if (ds.n() < 2) throw std::invalid_argument("dataset must have at least 2 rows");

    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        const ColumnSpec& spec = ds.columns[c];
        if (spec.kind == ColumnKind::categorical) {
            if (spec.categories.empty())
                throw std::invalid_argument("categorical column '" + spec.name +
                                            "' has no categories");
            std::unordered_set<std::string> seen(spec.categories.begin(), spec.categories.end());
            if (seen.size() != spec.categories.size())
                throw std::invalid_argument("categorical column '" + spec.name +
                                            "' has duplicate categories");
            for (std::size_t r = 0; r < ds.n(); ++r) {
                double v = ds.cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                if (!(v >= 0) || v != std::floor(v) ||
                    static_cast<std::size_t>(v) >= spec.categories.size())
                    throw std::invalid_argument("invalid category index at " +
                                                cell_ref(r, spec.name));
            }
        }
    }
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.columns = ds.columns;
    out.target = ds.target;
    out.cells.resize(static_cast<Eigen::Index>(rows.size()), ds.cells.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.n()) throw std::invalid_argument("subset row index out of range");
        out.cells.row(static_cast<Eigen::Index>(i)) =
            ds.cells.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

namespace {

void require_same_schema(const Dataset& a, const Dataset& b, const char* what) {
    bool ok = a.columns.size() == b.columns.size() && a.target == b.target;
    if (ok) {
        for (std::size_t i = 0; i < a.columns.size(); ++i) {
            ok = ok && a.columns[i].name == b.columns[i].name &&
                 a.columns[i].kind == b.columns[i].kind &&
                 a.columns[i].categories == b.columns[i].categories;
        }
    }
    if (!ok) throw std::invalid_argument(std::string(what) + ": schema mismatch");
}

}  // namespace

Dataset concat(const Dataset& a, const Dataset& b) {
    require_same_schema(a, b, "concat");
    Dataset out;
    out.columns = a.columns;
    out.target = a.target;
    out.cells.resize(a.cells.rows() + b.cells.rows(), a.cells.cols());
    out.cells.topRows(a.cells.rows()) = a.cells;
    out.cells.bottomRows(b.cells.rows()) = b.cells;
    return out;
}

EncodedMatrix fit_encode(const Dataset& ds) {
    validate(ds);
    const auto n = ds.cells.rows();

    EncodedMatrix em;
    em.schema = ds.columns;
    em.target_column = ds.target;

    // layout pass
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (c == ds.target) continue;
        const ColumnSpec& spec = ds.columns[c];
        if (spec.kind == ColumnKind::categorical) {
            for (std::size_t lvl = 0; lvl < spec.categories.size(); ++lvl) {
                EncodedFeature f;
                f.source_column = c;
                f.role = FeatureRole::one_hot_level;
                f.level = lvl;
                em.feature_map.push_back(f);
            }
        } else {
            EncodedFeature f;
            f.source_column = c;
            f.role = FeatureRole::standardized_numeric;
            em.feature_map.push_back(f);
        }
    }

    em.values.resize(n, static_cast<Eigen::Index>(em.feature_map.size()));
    for (std::size_t j = 0; j < em.feature_map.size(); ++j) {
        EncodedFeature& f = em.feature_map[j];
        const auto col = ds.cells.col(static_cast<Eigen::Index>(f.source_column));
        auto out = em.values.col(static_cast<Eigen::Index>(j));
        if (f.role == FeatureRole::one_hot_level) {
            out = (col.array() == static_cast<double>(f.level)).cast<double>();
        } else {
            f.mean = col.mean();
            // population convention: divide by n
            double var = (col.array() - f.mean).square().sum() / static_cast<double>(n);
            double sd = std::sqrt(var);
            if (sd > 0.0) {
                f.stddev = sd;
                out = (col.array() - f.mean) / sd;
            } else {
                f.stddev = 1.0;
                f.constant = true;
                out.setZero();
            }
        }
    }

    const auto y = ds.cells.col(static_cast<Eigen::Index>(ds.target));
    em.target_mean = y.mean();
    double yvar = (y.array() - em.target_mean).square().sum() / static_cast<double>(n);
    double ysd = std::sqrt(yvar);
    if (ysd > 0.0) {
        em.target_stddev = ysd;
    } else {
        em.target_stddev = 1.0;
        em.target_constant = true;
    }
    em.target_vector = (y.array() - em.target_mean) / em.target_stddev;
    return em;
}

ApplyResult apply_encode(const EncodedMatrix& em, const Dataset& ds) {
    Dataset ref;
    ref.columns = em.schema;
    ref.target = em.target_column;
    ref.cells.resize(0, static_cast<Eigen::Index>(em.schema.size()));
    {
        bool ok = ds.columns.size() == em.schema.size() && ds.target == em.target_column;
        for (std::size_t i = 0; ok && i < ds.columns.size(); ++i)
            ok = ds.columns[i].name == em.schema[i].name &&
                 ds.columns[i].kind == em.schema[i].kind;
        if (!ok) throw std::invalid_argument("apply_encode: column mismatch with fitted schema");
    }

    const auto n = ds.cells.rows();
    ApplyResult res;
    res.values.resize(n, static_cast<Eigen::Index>(em.feature_map.size()));

    // categorical columns are matched by label so that a dataset whose spec
    // carries extra (fit-time-unseen) categories still encodes correctly
    std::vector<std::vector<int>> level_remap(ds.columns.size());
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (ds.columns[c].kind != ColumnKind::categorical || c == ds.target) continue;
        const auto& fitted = em.schema[c].categories;
        std::unordered_map<std::string, int> fitted_idx;
        for (std::size_t i = 0; i < fitted.size(); ++i)
            fitted_idx[fitted[i]] = static_cast<int>(i);
        level_remap[c].reserve(ds.columns[c].categories.size());
        for (const auto& cat : ds.columns[c].categories) {
            auto it = fitted_idx.find(cat);
            level_remap[c].push_back(it == fitted_idx.end() ? -1 : it->second);
        }
    }

    std::size_t j = 0;
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (c == ds.target) continue;
        const ColumnSpec& spec = ds.columns[c];
        const auto col = ds.cells.col(static_cast<Eigen::Index>(c));
        if (spec.kind == ColumnKind::categorical) {
            const std::size_t group = em.schema[c].categories.size();
            auto block = res.values.block(0, static_cast<Eigen::Index>(j), n,
                                          static_cast<Eigen::Index>(group));
            block.setZero();
            for (Eigen::Index r = 0; r < n; ++r) {
                int local = static_cast<int>(col(r));
                int fitted = level_remap[c].empty() ? local : level_remap[c][local];
                if (fitted < 0) {
                    res.warnings.push_back("unseen category '" +
                                           spec.categories[static_cast<std::size_t>(local)] +
                                           "' at " + cell_ref(static_cast<std::size_t>(r), spec.name) +
                                           "; one-hot group left at zero");
                } else {
                    block(r, fitted) = 1.0;
                }
            }
            j += group;
        } else {
            const EncodedFeature& f = em.feature_map[j];
            res.values.col(static_cast<Eigen::Index>(j)) = (col.array() - f.mean) / f.stddev;
            if (f.constant) res.values.col(static_cast<Eigen::Index>(j)).setZero();
            ++j;
        }
    }

    const auto y = ds.cells.col(static_cast<Eigen::Index>(ds.target));
    res.target = (y.array() - em.target_mean) / em.target_stddev;
    return res;
}

Dataset decode(const EncodedMatrix& em, const Eigen::MatrixXd& values,
               const Eigen::VectorXd& target) {
    if (static_cast<std::size_t>(values.cols()) != em.feature_map.size())
        throw std::invalid_argument("decode: value width does not match feature map");
    if (values.rows() != target.size())
        throw std::invalid_argument("decode: row count does not match target length");

    const auto m = values.rows();
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            if (!std::isfinite(values(r, c)))
                fail("decode: non-finite value at " +
                     cell_ref(static_cast<std::size_t>(r),
                              em.schema[em.feature_map[static_cast<std::size_t>(c)].source_column].name));
        if (!std::isfinite(target(r)))
            fail("decode: non-finite value at " +
                 cell_ref(static_cast<std::size_t>(r), em.schema[em.target_column].name));
    }

    Dataset out;
    out.columns = em.schema;
    out.target = em.target_column;
    out.cells.resize(m, static_cast<Eigen::Index>(em.schema.size()));

    std::size_t j = 0;
    for (std::size_t c = 0; c < em.schema.size(); ++c) {
        if (c == em.target_column) continue;
        const ColumnSpec& spec = em.schema[c];
        auto dest = out.cells.col(static_cast<Eigen::Index>(c));
        if (spec.kind == ColumnKind::categorical) {
            const std::size_t group = spec.categories.size();
            for (Eigen::Index r = 0; r < m; ++r) {
                std::size_t best = 0;
                double best_v = values(r, static_cast<Eigen::Index>(j));
                for (std::size_t lvl = 1; lvl < group; ++lvl) {
                    double v = values(r, static_cast<Eigen::Index>(j + lvl));
                    if (v > best_v) {  // ties keep the lowest category index
                        best_v = v;
                        best = lvl;
                    }
                }
                dest(r) = static_cast<double>(best);
            }
            j += group;
        } else {
            const EncodedFeature& f = em.feature_map[j];
            dest = values.col(static_cast<Eigen::Index>(j)).array() * f.stddev + f.mean;
            if (spec.kind == ColumnKind::integer)
                for (Eigen::Index r = 0; r < m; ++r) dest(r) = std::nearbyint(dest(r));
            ++j;
        }
    }
    out.cells.col(static_cast<Eigen::Index>(em.target_column)) =
        target.array() * em.target_stddev + em.target_mean;
    return out;
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::complement_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) rows.push_back(i);
    return rows;
}

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n)
        throw std::invalid_argument("kfold: need 2 <= k <= n, got k=" + std::to_string(k) +
                                    ", n=" + std::to_string(n));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(perm);

    FoldPlan plan;
    plan.k = k;
    plan.rng_seed = seed;
    plan.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) plan.assignments[perm[i]] = i % k;
    return plan;
}

// ---------------------------------------------------------------------------
// schema file + CSV

SchemaFile schema_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("schema: invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("columns") || !doc.contains("target"))
        fail("schema: expected an object with 'columns' and 'target'");

    SchemaFile sf;
    sf.target = doc.at("target").get<std::string>();
    for (const auto& c : doc.at("columns")) {
        ColumnSpec spec;
        spec.name = c.at("name").get<std::string>();
        spec.kind = kind_from_name(c.at("kind").get<std::string>());
        if (c.contains("categories"))
            spec.categories = c.at("categories").get<std::vector<std::string>>();
        sf.columns.push_back(std::move(spec));
    }
    return sf;
}

SchemaFile read_schema_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("schema file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return schema_from_json(ss.str());
}

std::string schema_to_json(const std::vector<ColumnSpec>& columns, const std::string& target) {
    json doc;
    doc["columns"] = json::array();
    for (const auto& c : columns) {
        json jc;
        jc["name"] = c.name;
        jc["kind"] = kind_name(c.kind);
        if (c.kind == ColumnKind::categorical) jc["categories"] = c.categories;
        doc["columns"].push_back(jc);
    }
    doc["target"] = target;
    return doc.dump(2) + "\n";
}

void write_schema_file(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write schema file: " + path);
    out << schema_to_json(ds.columns, ds.columns[ds.target].name);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_numeric(const std::string& s, std::size_t row, const std::string& col) {
    double v = 0.0;
    auto first = s.data();
    auto last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        fail("unparseable numeric cell '" + s + "' at " + cell_ref(row, col));
    return v;
}

double parse_integer(const std::string& s, std::size_t row, const std::string& col) {
    long long v = 0;
    auto first = s.data();
    auto last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        fail("unparseable integer cell '" + s + "' at " + cell_ref(row, col));
    return static_cast<double>(v);
}

}  // namespace

Dataset load_csv(const std::string& path, std::vector<ColumnSpec> schema,
                 const std::string& target) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("csv file not found: " + path);

    std::string header;
    if (!std::getline(in, header)) fail("csv file is empty: " + path);
    auto names = split_line(header);
    if (names.size() != schema.size())
        fail("header mismatch: csv has " + std::to_string(names.size()) +
             " columns, schema has " + std::to_string(schema.size()));
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] != schema[i].name)
            fail("header mismatch at position " + std::to_string(i + 1) + ": csv '" +
                 names[i] + "' vs schema '" + schema[i].name + "'");

    std::size_t target_idx = schema.size();
    for (std::size_t i = 0; i < schema.size(); ++i)
        if (schema[i].name == target) target_idx = i;
    if (target_idx == schema.size()) fail("target column '" + target + "' not in schema");
    if (schema[target_idx].kind != ColumnKind::numeric)
        fail("target column '" + target + "' must be numeric");

    std::vector<bool> fixed(schema.size());
    std::vector<std::unordered_map<std::string, std::size_t>> cat_index(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].kind != ColumnKind::categorical) continue;
        fixed[i] = !schema[i].categories.empty();
        for (std::size_t c = 0; c < schema[i].categories.size(); ++c)
            cat_index[i][schema[i].categories[c]] = c;
    }

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        auto fields = split_line(line);
        if (fields.size() != schema.size())
            fail("row " + std::to_string(row + 1) + " has " + std::to_string(fields.size()) +
                 " fields, expected " + std::to_string(schema.size()));
        std::vector<double> vals(schema.size());
        for (std::size_t c = 0; c < schema.size(); ++c) {
            const std::string& s = fields[c];
            switch (schema[c].kind) {
                case ColumnKind::numeric:
                    vals[c] = parse_numeric(s, row, schema[c].name);
                    break;
                case ColumnKind::integer:
                    vals[c] = parse_integer(s, row, schema[c].name);
                    break;
                case ColumnKind::categorical: {
                    auto it = cat_index[c].find(s);
                    if (it == cat_index[c].end()) {
                        if (fixed[c])
                            fail("unknown category '" + s + "' at " + cell_ref(row, schema[c].name));
                        std::size_t idx = schema[c].categories.size();
                        schema[c].categories.push_back(s);
                        cat_index[c][s] = idx;
                        vals[c] = static_cast<double>(idx);
                    } else {
                        vals[c] = static_cast<double>(it->second);
                    }
                    break;
                }
            }
        }
        rows.push_back(std::move(vals));
        ++row;
    }
    if (rows.size() < 2) fail("csv has " + std::to_string(rows.size()) + " data rows, need >= 2");

    Dataset ds;
    ds.columns = std::move(schema);
    ds.target = target_idx;
    ds.cells.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(ds.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < ds.columns.size(); ++c)
            ds.cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    validate(ds);
    return ds;
}

std::string to_csv(const Dataset& ds) {
    std::string out;
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (c) out.push_back(',');
        out += ds.columns[c].name;
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < ds.n(); ++r) {
        for (std::size_t c = 0; c < ds.columns.size(); ++c) {
            if (c) out.push_back(',');
            double v = ds.cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            switch (ds.columns[c].kind) {
                case ColumnKind::numeric:
                    out += format_double(v);
                    break;
                case ColumnKind::integer:
                    out += std::to_string(static_cast<long long>(v));
                    break;
                case ColumnKind::categorical:
                    out += ds.columns[c].categories[static_cast<std::size_t>(v)];
                    break;
            }
        }
        out.push_back('\n');
    }
    return out;
}

void write_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write csv file: " + path);
    out << to_csv(ds);
}

}  // namespace dsb::tabular
