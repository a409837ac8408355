#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmsfd/graph.hpp"
#include "lmsfd/matrix.hpp"

namespace lmsfd {

// Dense language index in [0, L).
using LangId = int;

enum class SynthesisMode { LanguageWise, PairWise };

std::string to_string(SynthesisMode mode);
SynthesisMode synthesis_mode_from_string(const std::string& s);

// Which factors a forward pass traverses: the per-language (or per-pair)
// ones, or the shared pair used for fuse distillation.
enum class Route { Ls, Shared };

// A linear layer `base` (r x c) augmented with per-language low-rank factors:
// a vertical r x d matrix and a flat d x c matrix per language, plus an
// optional shared vertical/flat pair. The synthesized language matrix is
// vertical * flat, added onto base.
struct LmsLinear {
    std::size_t out_dim = 0;  // r
    std::size_t in_dim = 0;   // c
    std::size_t rank = 0;     // d
    SynthesisMode mode = SynthesisMode::PairWise;
    Matrix base;                       // r x c
    std::vector<Matrix> verticals;     // one r x d per language
    std::vector<Matrix> flats;         // one d x c per language
    std::optional<Matrix> shared_vertical;  // r x d
    std::optional<Matrix> shared_flat;      // d x c
    bool freeze_base = false;

    std::size_t num_languages() const { return verticals.size(); }
    bool has_shared() const { return shared_vertical.has_value(); }
    // L*d*(r+c), plus d*(r+c) when shared factors are present.
    std::size_t extra_param_count() const;
};

// base ~ N(0, 1/c), verticals ~ N(0, 0.02^2), flats exactly zero (so a fresh
// layer is bitwise the base map); shared factors follow the same scheme.
// Deterministic per seed.
LmsLinear make_lms_linear(std::size_t out_dim, std::size_t in_dim, std::size_t rank,
                          std::size_t n_languages, SynthesisMode mode, bool with_shared,
                          std::uint64_t seed);

// Resolves (src, tgt) to the (vertical, flat) language keys for the layer's
// mode: pair-wise uses (src, tgt), language-wise uses (src, src).
std::pair<LangId, LangId> factor_keys(const LmsLinear& layer, LangId src, LangId tgt);

// Materializes base + vertical * flat as a full r x c matrix. Oracle/test
// path; training always goes through the factored forward below.
Matrix synthesize(const LmsLinear& layer, LangId src, LangId tgt);
Matrix synthesize_shared(const LmsLinear& layer);

// Factored forward, column-token layout: x is c x B, result r x B, computed
// as base*x + vertical*(flat*x) without materializing the r x c product.
// Parameters are bound through `binder` when given (training), or entered as
// constants when null (evaluation).
Var lms_forward(Tape& t, LmsLinear& layer, Var x, LangId src, LangId tgt, Route route,
                Binder* binder = nullptr);

// Same map for row-token layout: x is B x c, result B x r, computed as
// x*base^T + (x*flat^T)*vertical^T.
Var lms_forward_rows(Tape& t, LmsLinear& layer, Var x, LangId src, LangId tgt, Route route,
                     Binder* binder = nullptr);

// Exact multiply-add counts for one token column.
struct FlopsPerToken {
    std::size_t base;       // r*c
    std::size_t lms_extra;  // d*(r+c)
};
FlopsPerToken layer_flops_per_token(std::size_t out_dim, std::size_t in_dim, std::size_t rank);
FlopsPerToken layer_flops_per_token(const LmsLinear& layer);

nlohmann::json lms_linear_to_json(const LmsLinear& layer);
LmsLinear lms_linear_from_json(const nlohmann::json& j);

}  // namespace lmsfd
