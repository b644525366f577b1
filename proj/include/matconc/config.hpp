#pragma once

#include <optional>
#include <string_view>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "matconc/samplers.hpp"
#include "matconc/sym_matrix.hpp"

namespace matconc::cli {

using nlohmann::json;

/// Configuration error carrying the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error("config field '" + path + "': " + what) {}
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + key, "missing");
    return j.at(key);
}

inline double require_number(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ConfigError(path + key, "must be a number");
    return v.get<double>();
}

inline long long require_integer(const json& j, const std::string& key,
                                 const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number_integer()) throw ConfigError(path + key, "must be an integer");
    return v.get<long long>();
}

inline std::string require_string(const json& j, const std::string& key,
                                  const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_string()) throw ConfigError(path + key, "must be a string");
    return v.get<std::string>();
}

inline std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "must be a nonempty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(path, "entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::vector<long long> integer_list(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "must be a nonempty array");
    std::vector<long long> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) throw ConfigError(path, "entries must be integers");
        out.push_back(e.get<long long>());
    }
    return out;
}

}  // namespace detail

/// Scalar law description.
struct LawSpec {
    std::string law;  // gaussian | student-t | pareto | rademacher
    double dof = 0.0;
    double alpha = 0.0;

    static LawSpec parse(const json& j, const std::string& path) {
        LawSpec spec;
        spec.law = detail::require_string(j, "law", path);
        if (spec.law == "student-t") {
            spec.dof = detail::require_number(j, "dof", path);
        } else if (spec.law == "pareto") {
            spec.alpha = detail::require_number(j, "alpha", path);
        } else if (spec.law != "gaussian" && spec.law != "rademacher") {
            throw ConfigError(path + "law", "unknown law '" + spec.law + "'");
        }
        return spec;
    }

    json to_json() const {
        json j{{"law", law}};
        if (law == "student-t") j["dof"] = dof;
        if (law == "pareto") j["alpha"] = alpha;
        return j;
    }

    ScalarLaw build() const {
        if (law == "gaussian") return ScalarLaw::gaussian();
        if (law == "student-t") return ScalarLaw::student_t(dof);
        if (law == "pareto") return ScalarLaw::pareto_symmetric(alpha);
        return ScalarLaw::rademacher();
    }
};

/// Covariance description: explicit eigenvalues, a decay law, identity, or a
/// matrix file in the symmetric text format.
struct CovarianceSpec {
    std::vector<double> eigenvalues;  // explicit spectrum
    std::string decay;                // geometric | polynomial ("" = not used)
    double ratio = 0.0;
    double exponent = 0.0;
    int dim = 0;
    int identity = 0;    // identity dimension (0 = not used)
    std::string file;    // matrix file path ("" = not used)
    long long cov_seed = 0;

    static CovarianceSpec parse(const json& j, const std::string& path) {
        CovarianceSpec spec;
        if (j.contains("eigenvalues")) {
            spec.eigenvalues = detail::number_list(j.at("eigenvalues"), path + "eigenvalues");
        } else if (j.contains("decay")) {
            spec.decay = detail::require_string(j, "decay", path);
            spec.dim = static_cast<int>(detail::require_integer(j, "dim", path));
            if (spec.decay == "geometric") {
                spec.ratio = detail::require_number(j, "ratio", path);
            } else if (spec.decay == "polynomial") {
                spec.exponent = detail::require_number(j, "exponent", path);
            } else {
                throw ConfigError(path + "decay", "unknown decay '" + spec.decay + "'");
            }
        } else if (j.contains("identity")) {
            spec.identity = static_cast<int>(detail::require_integer(j, "identity", path));
            if (spec.identity < 1) throw ConfigError(path + "identity", "must be >= 1");
        } else if (j.contains("file")) {
            spec.file = detail::require_string(j, "file", path);
        } else {
            throw ConfigError(path, "need one of: eigenvalues, decay, identity, file");
        }
        if (j.contains("covSeed")) {
            spec.cov_seed = detail::require_integer(j, "covSeed", path);
        }
        return spec;
    }

    json to_json() const {
        json j;
        if (!eigenvalues.empty()) {
            j["eigenvalues"] = eigenvalues;
        } else if (!decay.empty()) {
            j["decay"] = decay;
            j["dim"] = dim;
            if (decay == "geometric") j["ratio"] = ratio;
            if (decay == "polynomial") j["exponent"] = exponent;
        } else if (identity > 0) {
            j["identity"] = identity;
        } else {
            j["file"] = file;
        }
        if (cov_seed != 0) j["covSeed"] = cov_seed;
        return j;
    }

    SymMatrix build() const {
        const SeedSpec seed{static_cast<std::uint64_t>(cov_seed), 0};
        if (!eigenvalues.empty()) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(eigenvalues.size()));
            for (std::size_t i = 0; i < eigenvalues.size(); ++i) v[i] = eigenvalues[i];
            return build_covariance(v, seed);
        }
        if (decay == "geometric") return build_covariance(spectrum_geometric(ratio, dim), seed);
        if (decay == "polynomial") {
            return build_covariance(spectrum_polynomial(exponent, dim), seed);
        }
        if (identity > 0) return SymMatrix::identity(identity);
        return io::read_sym(file);
    }
};

/// Random vector model description.
struct ModelSpec {
    std::string type;  // gaussian | student-t | pareto | kl
    double dof = 0.0;
    double alpha = 0.0;
    std::optional<LawSpec> coefficient;  // for kl
    CovarianceSpec covariance;

    static ModelSpec parse(const json& j, const std::string& path) {
        ModelSpec spec;
        spec.type = detail::require_string(j, "type", path);
        if (spec.type == "student-t") {
            spec.dof = detail::require_number(j, "dof", path);
        } else if (spec.type == "pareto") {
            spec.alpha = detail::require_number(j, "alpha", path);
        } else if (spec.type == "kl") {
            spec.coefficient =
                LawSpec::parse(detail::require(j, "coefficient", path), path + "coefficient.");
        } else if (spec.type != "gaussian") {
            throw ConfigError(path + "type", "unknown model type '" + spec.type + "'");
        }
        spec.covariance =
            CovarianceSpec::parse(detail::require(j, "covariance", path), path + "covariance.");
        return spec;
    }

    json to_json() const {
        json j{{"type", type}};
        if (type == "student-t") j["dof"] = dof;
        if (type == "pareto") j["alpha"] = alpha;
        if (coefficient) j["coefficient"] = coefficient->to_json();
        j["covariance"] = covariance.to_json();
        return j;
    }

    VectorModel build() const {
        SymMatrix sigma = covariance.build();
        if (type == "gaussian") return VectorModel::gaussian(std::move(sigma));
        if (type == "student-t") return VectorModel::student_t(std::move(sigma), dof);
        if (type == "pareto") return VectorModel::pareto_symmetric(std::move(sigma), alpha);
        return VectorModel::kl(std::move(sigma), coefficient->build());
    }
};

/// Matrix ensemble description.
struct EnsembleSpec {
    std::string type;  // sign-fixed | scalar-heavy | centered-rank-one | psd-rank-one
    int n = 0;
    int dim = 0;
    long long matrix_seed = 0;
    double max_norm = 1.0;
    std::optional<LawSpec> scalar;      // scalar-heavy
    std::optional<ModelSpec> model;     // rank-one kinds

    static EnsembleSpec parse(const json& j, const std::string& path) {
        EnsembleSpec spec;
        spec.type = detail::require_string(j, "type", path);
        spec.n = static_cast<int>(detail::require_integer(j, "n", path));
        if (spec.n < 1) throw ConfigError(path + "n", "must be >= 1");
        if (spec.type == "sign-fixed" || spec.type == "scalar-heavy") {
            spec.dim = static_cast<int>(detail::require_integer(j, "dim", path));
            if (spec.dim < 1) throw ConfigError(path + "dim", "must be >= 1");
            spec.matrix_seed = detail::require_integer(j, "matrixSeed", path);
            if (j.contains("maxNorm")) {
                spec.max_norm = detail::require_number(j, "maxNorm", path);
                if (!(spec.max_norm > 0.0)) throw ConfigError(path + "maxNorm", "must be > 0");
            }
            if (spec.type == "scalar-heavy") {
                spec.scalar =
                    LawSpec::parse(detail::require(j, "scalar", path), path + "scalar.");
            }
        } else if (spec.type == "centered-rank-one" || spec.type == "psd-rank-one") {
            spec.model = ModelSpec::parse(detail::require(j, "model", path), path + "model.");
        } else {
            throw ConfigError(path + "type", "unknown ensemble type '" + spec.type + "'");
        }
        return spec;
    }

    json to_json() const {
        json j{{"type", type}, {"n", n}};
        if (type == "sign-fixed" || type == "scalar-heavy") {
            j["dim"] = dim;
            j["matrixSeed"] = matrix_seed;
            j["maxNorm"] = max_norm;
            if (scalar) j["scalar"] = scalar->to_json();
        } else {
            j["model"] = model->to_json();
        }
        return j;
    }

    Ensemble build() const {
        if (type == "sign-fixed" || type == "scalar-heavy") {
            auto mats = random_sym_matrices(
                n, dim, SeedSpec{static_cast<std::uint64_t>(matrix_seed), 0}, max_norm);
            if (type == "sign-fixed") return Ensemble::sign_fixed(std::move(mats));
            return Ensemble::scalar_heavy(std::move(mats), scalar->build());
        }
        if (type == "centered-rank-one") {
            return Ensemble::centered_rank_one(model->build(), n);
        }
        return Ensemble::psd_rank_one(model->build(), n);
    }
};

/// One experiment: a kind plus its inputs. Numeric seeds are mandatory; the
/// runner never seeds from the wall clock.
struct ExperimentConfig {
    std::string name;
    std::string kind;
    long long trials = 0;
    long long master_seed = 0;
    std::string out_dir;        // optional; CLI --out overrides
    unsigned threads = 0;       // 0 = hardware default

    std::optional<EnsembleSpec> ensemble;
    std::optional<ModelSpec> model;

    std::vector<double> t_grid;       // optional explicit grid
    std::vector<double> p_list;
    std::vector<long long> n_list;
    std::vector<double> delta_list;
    std::vector<long long> dim_list;  // fit-constants sweep
    long long replications = 0;
    int eig_index = 0;
    double slope_min = -0.6, slope_max = -0.4;
    double u_level = -1.0;            // truncation level for proposition audits
    long long validate_seed = 0;      // held-out seed for fit-constants
    long long mc_masks = 0;           // subsample Monte Carlo masks
    std::optional<CovarianceSpec> matrix;  // subsample target (rectangular via file)
    std::string matrix_file;               // subsample: rectangular text format
    int directions = 16;
    double advantage_factor = 5.0;    // eig-scaling premise factor

    static constexpr const char* kinds[] = {
        "verify-bernstein", "verify-fuk-nagaev",  "verify-rosenthal",
        "verify-psd-rosenthal", "cov-scaling",    "eig-scaling",
        "subsample",        "audit",              "fit-constants"};

    static ExperimentConfig from_json(const json& j) {
        ExperimentConfig c;
        c.name = detail::require_string(j, "name", "");
        c.kind = detail::require_string(j, "kind", "");
        bool known = false;
        for (const char* k : kinds) known |= (c.kind == k);
        if (!known) throw ConfigError("kind", "unknown kind '" + c.kind + "'");

        c.trials = detail::require_integer(j, "trials", "");
        if (c.trials < 100) throw ConfigError("trials", "must be >= 100");
        c.master_seed = detail::require_integer(j, "masterSeed", "");

        if (j.contains("out")) c.out_dir = detail::require_string(j, "out", "");
        if (j.contains("threads")) {
            c.threads = static_cast<unsigned>(detail::require_integer(j, "threads", ""));
        }
        if (j.contains("ensemble")) {
            c.ensemble = EnsembleSpec::parse(j.at("ensemble"), "ensemble.");
        }
        if (j.contains("model")) c.model = ModelSpec::parse(j.at("model"), "model.");
        if (j.contains("tGrid")) c.t_grid = detail::number_list(j.at("tGrid"), "tGrid");
        if (j.contains("pList")) c.p_list = detail::number_list(j.at("pList"), "pList");
        if (j.contains("nList")) c.n_list = detail::integer_list(j.at("nList"), "nList");
        if (j.contains("dimList")) c.dim_list = detail::integer_list(j.at("dimList"), "dimList");
        if (j.contains("deltaList")) {
            c.delta_list = detail::number_list(j.at("deltaList"), "deltaList");
        }
        if (j.contains("replications")) {
            c.replications = detail::require_integer(j, "replications", "");
        }
        if (j.contains("eigIndex")) {
            c.eig_index = static_cast<int>(detail::require_integer(j, "eigIndex", ""));
        }
        if (j.contains("slopeRange")) {
            const auto range = detail::number_list(j.at("slopeRange"), "slopeRange");
            if (range.size() != 2 || range[0] >= range[1]) {
                throw ConfigError("slopeRange", "must be [lo, hi] with lo < hi");
            }
            c.slope_min = range[0];
            c.slope_max = range[1];
        }
        if (j.contains("uLevel")) c.u_level = detail::require_number(j, "uLevel", "");
        if (j.contains("validateSeed")) {
            c.validate_seed = detail::require_integer(j, "validateSeed", "");
        }
        if (j.contains("mcMasks")) c.mc_masks = detail::require_integer(j, "mcMasks", "");
        if (j.contains("matrix")) {
            c.matrix = CovarianceSpec::parse(j.at("matrix"), "matrix.");
        }
        if (j.contains("matrixFile")) {
            c.matrix_file = detail::require_string(j, "matrixFile", "");
        }
        if (j.contains("directions")) {
            c.directions = static_cast<int>(detail::require_integer(j, "directions", ""));
        }
        if (j.contains("advantageFactor")) {
            c.advantage_factor = detail::require_number(j, "advantageFactor", "");
        }
        c.validate_kind_requirements();
        return c;
    }

    static ExperimentConfig parse(std::string_view text) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError("(root)", std::string("invalid JSON: ") + e.what());
        }
        return from_json(j);
    }

    json to_json() const {
        json j{{"name", name}, {"kind", kind}, {"trials", trials}, {"masterSeed", master_seed}};
        if (!out_dir.empty()) j["out"] = out_dir;
        if (threads != 0) j["threads"] = threads;
        if (ensemble) j["ensemble"] = ensemble->to_json();
        if (model) j["model"] = model->to_json();
        if (!t_grid.empty()) j["tGrid"] = t_grid;
        if (!p_list.empty()) j["pList"] = p_list;
        if (!n_list.empty()) j["nList"] = n_list;
        if (!dim_list.empty()) j["dimList"] = dim_list;
        if (!delta_list.empty()) j["deltaList"] = delta_list;
        if (replications != 0) j["replications"] = replications;
        if (eig_index != 0) j["eigIndex"] = eig_index;
        j["slopeRange"] = {slope_min, slope_max};
        if (u_level >= 0.0) j["uLevel"] = u_level;
        if (validate_seed != 0) j["validateSeed"] = validate_seed;
        if (mc_masks != 0) j["mcMasks"] = mc_masks;
        if (matrix) j["matrix"] = matrix->to_json();
        if (!matrix_file.empty()) j["matrixFile"] = matrix_file;
        j["directions"] = directions;
        j["advantageFactor"] = advantage_factor;
        return j;
    }

private:
    void validate_kind_requirements() const {
        auto need_ensemble = [&]() {
            if (!ensemble) throw ConfigError("ensemble", "required for kind " + kind);
        };
        auto need_model = [&]() {
            if (!model) throw ConfigError("model", "required for kind " + kind);
        };
        if (kind == "verify-bernstein" || kind == "verify-fuk-nagaev" || kind == "audit") {
            need_ensemble();
        } else if (kind == "verify-rosenthal" || kind == "verify-psd-rosenthal") {
            need_ensemble();
            if (p_list.empty()) throw ConfigError("pList", "required for kind " + kind);
        } else if (kind == "cov-scaling" || kind == "eig-scaling") {
            need_model();
            if (n_list.size() < 4) {
                throw ConfigError("nList", "need at least 4 sweep points for kind " + kind);
            }
            if (replications < 2) {
                throw ConfigError("replications", "must be >= 2 for kind " + kind);
            }
        } else if (kind == "subsample") {
            if (!matrix && matrix_file.empty()) {
                throw ConfigError("matrix", "need matrix or matrixFile for kind subsample");
            }
            if (delta_list.empty()) throw ConfigError("deltaList", "required for kind subsample");
            for (double d : delta_list) {
                if (!(d > 0.0 && d < 1.0)) {
                    throw ConfigError("deltaList", "entries must lie strictly in (0,1)");
                }
            }
        } else if (kind == "fit-constants") {
            if (n_list.empty()) throw ConfigError("nList", "required for kind fit-constants");
            if (dim_list.empty()) throw ConfigError("dimList", "required for kind fit-constants");
            if (p_list.empty()) throw ConfigError("pList", "required for kind fit-constants");
            if (!scalar_for_sweep()) {
                throw ConfigError("ensemble.scalar", "fit-constants needs a scalar-heavy spec");
            }
            if (validate_seed == 0) {
                throw ConfigError("validateSeed", "required for kind fit-constants");
            }
        }
    }

public:
    std::optional<LawSpec> scalar_for_sweep() const {
        if (ensemble && ensemble->scalar) return ensemble->scalar;
        return std::nullopt;
    }
};

}  // namespace matconc::cli
