#include "lmsfd/lms.hpp"

#include <cmath>
#include <sstream>

#include "lmsfd/errors.hpp"

namespace lmsfd {

std::string to_string(SynthesisMode mode) {
    return mode == SynthesisMode::LanguageWise ? "language-wise" : "pair-wise";
}

SynthesisMode synthesis_mode_from_string(const std::string& s) {
    if (s == "language-wise") return SynthesisMode::LanguageWise;
    if (s == "pair-wise") return SynthesisMode::PairWise;
    throw ConfigError("unknown synthesis mode '" + s + "'");
}

std::size_t LmsLinear::extra_param_count() const {
    const std::size_t per_language = rank * (out_dim + in_dim);
    std::size_t total = num_languages() * per_language;
    if (has_shared()) total += per_language;
    return total;
}

LmsLinear make_lms_linear(std::size_t out_dim, std::size_t in_dim, std::size_t rank,
                          std::size_t n_languages, SynthesisMode mode, bool with_shared,
                          std::uint64_t seed) {
    if (out_dim < 1 || in_dim < 1 || rank < 1 || n_languages < 1) {
        throw ConfigError("lms layer dimensions must all be at least 1");
    }
    if (rank > std::min(out_dim, in_dim) / 2) {
        std::ostringstream os;
        os << "lms rank " << rank << " exceeds min(" << out_dim << ", " << in_dim << ")/2";
        throw ConfigError(os.str());
    }
    LmsLinear layer;
    layer.out_dim = out_dim;
    layer.in_dim = in_dim;
    layer.rank = rank;
    layer.mode = mode;

    Rng rng(seed);
    const double base_std = 1.0 / std::sqrt(static_cast<double>(in_dim));
    layer.base = Matrix::randn(out_dim, in_dim, rng, base_std);
    layer.verticals.reserve(n_languages);
    layer.flats.reserve(n_languages);
    for (std::size_t l = 0; l < n_languages; ++l) {
        layer.verticals.push_back(Matrix::randn(out_dim, rank, rng, 0.02));
        layer.flats.emplace_back(rank, in_dim);  // exact zeros
    }
    if (with_shared) {
        layer.shared_vertical = Matrix::randn(out_dim, rank, rng, 0.02);
        layer.shared_flat = Matrix(rank, in_dim);
    }
    return layer;
}

namespace {

void check_language(const LmsLinear& layer, LangId lang) {
    if (lang < 0 || static_cast<std::size_t>(lang) >= layer.num_languages()) {
        std::ostringstream os;
        os << "unknown language " << lang << " for layer with " << layer.num_languages()
           << " languages";
        throw LookupError(os.str());
    }
}

void check_shared(const LmsLinear& layer) {
    if (!layer.has_shared()) {
        throw ConfigError("shared route requested but the layer has no shared factors");
    }
}

Var bind_or_const(Tape& t, Matrix& m, Binder* binder, bool frozen) {
    if (binder == nullptr || frozen) return t.constant(m);
    return binder->bind(m);
}

struct FactorVars {
    Var base;
    Var vertical;
    Var flat;
};

FactorVars bind_factors(Tape& t, LmsLinear& layer, LangId src, LangId tgt, Route route,
                        Binder* binder) {
    FactorVars out;
    out.base = bind_or_const(t, layer.base, binder, layer.freeze_base);
    if (route == Route::Shared) {
        check_shared(layer);
        out.vertical = bind_or_const(t, *layer.shared_vertical, binder, false);
        out.flat = bind_or_const(t, *layer.shared_flat, binder, false);
    } else {
        const auto [v_key, f_key] = factor_keys(layer, src, tgt);
        out.vertical = bind_or_const(t, layer.verticals[static_cast<std::size_t>(v_key)],
                                     binder, false);
        out.flat = bind_or_const(t, layer.flats[static_cast<std::size_t>(f_key)], binder, false);
    }
    return out;
}

}  // namespace

std::pair<LangId, LangId> factor_keys(const LmsLinear& layer, LangId src, LangId tgt) {
    check_language(layer, src);
    if (layer.mode == SynthesisMode::LanguageWise) {
        // tgt is intentionally ignored; the caller asserts src == tgt for
        // monolingual use.
        return {src, src};
    }
    check_language(layer, tgt);
    return {src, tgt};
}

Matrix synthesize(const LmsLinear& layer, LangId src, LangId tgt) {
    const auto [v_key, f_key] = factor_keys(layer, src, tgt);
    Matrix out = layer.base;
    mat_mul_acc(out, layer.verticals[static_cast<std::size_t>(v_key)],
                layer.flats[static_cast<std::size_t>(f_key)]);
    return out;
}

Matrix synthesize_shared(const LmsLinear& layer) {
    check_shared(layer);
    Matrix out = layer.base;
    mat_mul_acc(out, *layer.shared_vertical, *layer.shared_flat);
    return out;
}

Var lms_forward(Tape& t, LmsLinear& layer, Var x, LangId src, LangId tgt, Route route,
                Binder* binder) {
    if (x->value.rows() != layer.in_dim) {
        throw ShapeError("lms_forward: input " + x->value.shape_str() + " does not have " +
                         std::to_string(layer.in_dim) + " rows");
    }
    const FactorVars f = bind_factors(t, layer, src, tgt, route, binder);
    Var y = matmul(t, f.base, x);
    Var low = matmul(t, f.flat, x);         // d x B
    Var delta = matmul(t, f.vertical, low);  // r x B
    return add(t, y, delta);
}

Var lms_forward_rows(Tape& t, LmsLinear& layer, Var x, LangId src, LangId tgt, Route route,
                     Binder* binder) {
    if (x->value.cols() != layer.in_dim) {
        throw ShapeError("lms_forward_rows: input " + x->value.shape_str() +
                         " does not have " + std::to_string(layer.in_dim) + " cols");
    }
    const FactorVars f = bind_factors(t, layer, src, tgt, route, binder);
    Var y = matmul(t, x, f.base, false, true);
    Var low = matmul(t, x, f.flat, false, true);       // B x d
    Var delta = matmul(t, low, f.vertical, false, true);  // B x r
    return add(t, y, delta);
}

FlopsPerToken layer_flops_per_token(std::size_t out_dim, std::size_t in_dim, std::size_t rank) {
    return {out_dim * in_dim, rank * (out_dim + in_dim)};
}

FlopsPerToken layer_flops_per_token(const LmsLinear& layer) {
    return layer_flops_per_token(layer.out_dim, layer.in_dim, layer.rank);
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

}  // namespace

nlohmann::json lms_linear_to_json(const LmsLinear& layer) {
    nlohmann::json j;
    j["r"] = layer.out_dim;
    j["c"] = layer.in_dim;
    j["d"] = layer.rank;
    j["mode"] = to_string(layer.mode);
    j["base"] = matrix_to_json(layer.base);
    nlohmann::json verticals = nlohmann::json::array();
    nlohmann::json flats = nlohmann::json::array();
    for (const Matrix& m : layer.verticals) verticals.push_back(matrix_to_json(m));
    for (const Matrix& m : layer.flats) flats.push_back(matrix_to_json(m));
    j["verticals"] = std::move(verticals);
    j["flats"] = std::move(flats);
    if (layer.has_shared()) {
        j["shared_vertical"] = matrix_to_json(*layer.shared_vertical);
        j["shared_flat"] = matrix_to_json(*layer.shared_flat);
    }
    return j;
}

LmsLinear lms_linear_from_json(const nlohmann::json& j) {
    LmsLinear layer;
    layer.out_dim = j.at("r").get<std::size_t>();
    layer.in_dim = j.at("c").get<std::size_t>();
    layer.rank = j.at("d").get<std::size_t>();
    layer.mode = synthesis_mode_from_string(j.at("mode").get<std::string>());
    layer.base = matrix_from_json(j.at("base"));
    for (const auto& m : j.at("verticals")) layer.verticals.push_back(matrix_from_json(m));
    for (const auto& m : j.at("flats")) layer.flats.push_back(matrix_from_json(m));
    if (j.contains("shared_vertical") != j.contains("shared_flat")) {
        throw ConfigError("lms layer json must carry both shared factors or neither");
    }
    if (j.contains("shared_vertical")) {
        layer.shared_vertical = matrix_from_json(j.at("shared_vertical"));
        layer.shared_flat = matrix_from_json(j.at("shared_flat"));
    }
    if (layer.verticals.size() != layer.flats.size()) {
        throw ConfigError("lms layer json has mismatched vertical/flat language sets");
    }
    return layer;
}

}  // namespace lmsfd
