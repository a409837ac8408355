#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

namespace lmsfd {

// Shape inputs for the complexity comparison: L languages, a projection of
// out_dim x in_dim (r x c), low-rank dimension d, E experts, N layers.
struct ShapeParams {
    std::size_t n_languages = 1;   // L
    std::size_t out_dim = 1;       // r
    std::size_t in_dim = 1;        // c
    std::size_t rank = 1;          // d
    std::size_t n_experts = 0;     // E
    std::size_t n_layers = 1;      // N
    std::size_t projections_per_ffn = 2;
};

struct MethodBudget {
    std::size_t train_extra_params = 0;
    std::size_t inference_extra_params = 0;
    std::size_t extra_flops_per_token = 0;  // multiply-adds at inference
};

// Extra parameters for one r x c projection under each method.
//   LS         : L*r*c, same at inference
//   MoE        : E*r*c, same at inference
//   LMS        : L*d*(r+c), same at inference
//   LMS+FD     : (L+1)*d*(r+c) training, d*(r+c) inference
struct BudgetReport {
    ShapeParams shape;
    MethodBudget ls;
    MethodBudget moe;
    MethodBudget lms;
    MethodBudget lms_fd;
    // True when d < r*c/(r+c), i.e. the low-rank budget undercuts a full-rank
    // per-language projection.
    bool lms_parameter_efficient = false;
};

BudgetReport budget_single_projection(const ShapeParams& p);

// Language-specific parameters for a model that applies low-rank factors to
// both projections of every FFN block: 2*L*N*d*(c+r), with N counting the
// FFN blocks covered.
std::size_t budget_full_model(const ShapeParams& p);

// As above for attention placement: 4 in_dim x in_dim projections per
// attention block, i.e. N*4*L*d*2c, with N counting attention blocks.
std::size_t budget_attention_blocks(std::size_t n_languages, std::size_t in_dim,
                                    std::size_t rank, std::size_t n_blocks);

// Exact ratio of a full projection's multiply-adds to the factored extra:
// r*c / (d*(r+c)).
struct FlopsRatio {
    std::size_t numer = 0;
    std::size_t denom = 0;
    double value = 0.0;
    std::string rendered;  // e.g. "~20x"
};
FlopsRatio flops_ratio(std::size_t out_dim, std::size_t in_dim, std::size_t rank);

nlohmann::json budget_report_to_json(const BudgetReport& report);
std::string budget_report_table(const BudgetReport& report);

}  // namespace lmsfd
