#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lmsfd/data.hpp"
#include "lmsfd/graph.hpp"
#include "lmsfd/lms.hpp"
#include "lmsfd/matrix.hpp"

namespace lmsfd {

enum class FfnStrategy { Dense, FullRankLs, SwitchTop1, Lms, LmsFd };
enum class Placement { FfnOnly, AttnOnly, Both };

std::string to_string(FfnStrategy s);
FfnStrategy ffn_strategy_from_string(const std::string& s);
std::string to_string(Placement p);
Placement placement_from_string(const std::string& s);

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 64;   // c
    std::size_t ffn_dim = 128;    // r
    std::size_t n_layers = 2;     // per side
    std::size_t n_heads = 2;
    std::size_t n_languages = 1;  // L
    FfnStrategy ffn_strategy = FfnStrategy::Dense;
    std::size_t lms_rank = 8;     // d
    SynthesisMode lms_mode = SynthesisMode::PairWise;
    Placement placement = Placement::FfnOnly;
    std::size_t n_experts = 4;    // E, switch only
    double balance_weight = 0.01;
    bool freeze_base = false;
    std::uint64_t seed = 1;
};

// Throws ConfigError naming the offending field/combination.
void validate(const ModelConfig& cfg);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// A linear map that is either a dense weight or an LMS layer, depending on
// strategy and placement.
struct Proj {
    Matrix dense;  // out x in; unused when lms is set
    std::optional<LmsLinear> lms;

    bool is_lms() const { return lms.has_value(); }
};

struct AttnBlock {
    Proj wq, wk, wv, wo;  // all c x c
    Matrix ln_gain, ln_bias;
};

struct DenseFfn {
    Proj p1;  // r x c
    Proj p2;  // c x r
};

// Per-language full-rank FFN weights replacing the shared ones.
struct FullRankLsFfn {
    std::vector<Matrix> w1;  // r x c per language
    std::vector<Matrix> w2;  // c x r per language
};

// Top-1 routed expert FFN; biases stay shared.
struct SwitchFfn {
    Matrix gate;             // E x c
    std::vector<Matrix> w1;  // r x c per expert
    std::vector<Matrix> w2;  // c x r per expert
};

struct FfnBlock {
    std::variant<DenseFfn, FullRankLsFfn, SwitchFfn> impl;
    Matrix b1;  // 1 x r
    Matrix b2;  // 1 x c
    Matrix ln_gain, ln_bias;
};

struct EncoderLayer {
    AttnBlock self_attn;
    FfnBlock ffn;
};

struct DecoderLayer {
    AttnBlock self_attn;
    AttnBlock cross_attn;
    FfnBlock ffn;
};

struct Model {
    ModelConfig cfg;
    Matrix embedding;  // V x c, tied with the output projection
    std::vector<EncoderLayer> encoder;
    std::vector<DecoderLayer> decoder;
    Matrix enc_ln_gain, enc_ln_bias;
    Matrix dec_ln_gain, dec_ln_bias;
};

// Deterministic per seed. Backbone weights are drawn from one stream and
// language-specific factors from another, so models that differ only in
// strategy share bitwise-identical backbone parameters.
Model build_model(const ModelConfig& cfg);

// Teacher-forced forward pass over one homogeneous batch.
struct ModelOutput {
    Var logits = nullptr;        // [B*(tgt_len-1) x V]
    Var balance_loss = nullptr;  // switch models only
    std::vector<int> labels;     // aligned with logits rows
    std::vector<unsigned char> label_mask;  // 1 where label != pad
};

ModelOutput forward_model(Tape& t, Model& model, const Batch& batch, Route route,
                          Binder* binder = nullptr);

// Top-1 gate: expert per token by gate logits (ties toward the lower index)
// and the load-balance loss E * sum_e f_e * P_e.
struct GateResult {
    std::vector<int> expert_of_token;
    Var balance_loss = nullptr;
    Var gate_probs = nullptr;  // [n x E]
};
GateResult switch_gate(Tape& t, Var hidden, Var gate_weight, std::size_t n_experts);

// Named access to every parameter matrix; order is stable across runs and
// checkpoints. ls_extra marks language-specific / expert storage.
struct ParamInfo {
    std::string name;
    Matrix* matrix;
    bool ls_extra;
};
std::vector<ParamInfo> collect_params(Model& model);

struct CensusBreakdown {
    std::size_t total = 0;
    std::size_t encoder = 0;
    std::size_t decoder = 0;
    std::size_t ffn = 0;
    std::size_t attention = 0;
};
CensusBreakdown ls_param_census(Model& model);

// Single-file checkpoint, version-tagged.
nlohmann::json model_to_json(Model& model);
Model model_from_json(const nlohmann::json& j);
void save_model(Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace lmsfd
