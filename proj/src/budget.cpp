#include "lmsfd/budget.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace lmsfd {

BudgetReport budget_single_projection(const ShapeParams& p) {
    BudgetReport report;
    report.shape = p;
    const std::size_t full = p.out_dim * p.in_dim;
    const std::size_t low = p.rank * (p.out_dim + p.in_dim);

    report.ls.train_extra_params = p.n_languages * full;
    report.ls.inference_extra_params = report.ls.train_extra_params;
    report.ls.extra_flops_per_token = full;

    report.moe.train_extra_params = p.n_experts * full;
    report.moe.inference_extra_params = report.moe.train_extra_params;
    // the routed expert plus the gate
    report.moe.extra_flops_per_token = p.n_experts == 0 ? 0 : full + p.n_experts * p.in_dim;

    report.lms.train_extra_params = p.n_languages * low;
    report.lms.inference_extra_params = report.lms.train_extra_params;
    report.lms.extra_flops_per_token = low;

    report.lms_fd.train_extra_params = (p.n_languages + 1) * low;
    report.lms_fd.inference_extra_params = low;
    report.lms_fd.extra_flops_per_token = low;

    report.lms_parameter_efficient =
        p.rank * (p.out_dim + p.in_dim) < p.out_dim * p.in_dim;
    return report;
}

std::size_t budget_full_model(const ShapeParams& p) {
    return p.projections_per_ffn * p.n_languages * p.n_layers * p.rank *
           (p.in_dim + p.out_dim);
}

std::size_t budget_attention_blocks(std::size_t n_languages, std::size_t in_dim,
                                    std::size_t rank, std::size_t n_blocks) {
    return n_blocks * 4 * n_languages * rank * (in_dim + in_dim);
}

FlopsRatio flops_ratio(std::size_t out_dim, std::size_t in_dim, std::size_t rank) {
    FlopsRatio r;
    r.numer = out_dim * in_dim;
    r.denom = rank * (out_dim + in_dim);
    r.value = static_cast<double>(r.numer) / static_cast<double>(r.denom);
    std::ostringstream os;
    os << "~" << std::llround(r.value) << "x";
    r.rendered = os.str();
    return r;
}

namespace {

nlohmann::json method_to_json(const MethodBudget& m) {
    return {{"train_extra_params", m.train_extra_params},
            {"inference_extra_params", m.inference_extra_params},
            {"extra_flops_per_token", m.extra_flops_per_token}};
}

}  // namespace

nlohmann::json budget_report_to_json(const BudgetReport& report) {
    nlohmann::json j;
    j["shape"] = {{"L", report.shape.n_languages}, {"r", report.shape.out_dim},
                  {"c", report.shape.in_dim},      {"d", report.shape.rank},
                  {"E", report.shape.n_experts},   {"N", report.shape.n_layers}};
    j["ls"] = method_to_json(report.ls);
    j["moe"] = method_to_json(report.moe);
    j["lms"] = method_to_json(report.lms);
    j["lms_fd"] = method_to_json(report.lms_fd);
    j["lms_parameter_efficient"] = report.lms_parameter_efficient;
    j["full_model_ls_params"] = budget_full_model(report.shape);
    return j;
}

std::string budget_report_table(const BudgetReport& report) {
    const auto& s = report.shape;
    std::ostringstream os;
    os << "extra parameters per " << s.out_dim << "x" << s.in_dim << " projection"
       << " (L=" << s.n_languages << ", E=" << s.n_experts << ", d=" << s.rank << ")\n";
    os << std::left << std::setw(10) << "method" << std::right << std::setw(16) << "train"
       << std::setw(16) << "inference" << std::setw(16) << "flops/token" << "\n";
    auto line = [&os](const char* name, const MethodBudget& m) {
        os << std::left << std::setw(10) << name << std::right << std::setw(16)
           << m.train_extra_params << std::setw(16) << m.inference_extra_params
           << std::setw(16) << m.extra_flops_per_token << "\n";
    };
    line("LS", report.ls);
    line("MoE", report.moe);
    line("LMS", report.lms);
    line("LMS+FD", report.lms_fd);
    os << "full-model LS params (2*L*N*d*(c+r), N=" << s.n_layers
       << "): " << budget_full_model(s) << "\n";
    const FlopsRatio fr = flops_ratio(s.out_dim, s.in_dim, s.rank);
    os << "dense/low-rank flops ratio: " << fr.numer << "/" << fr.denom << " = " << fr.value
       << " (" << fr.rendered << ")\n";
    os << "lms parameter-efficient vs full-rank LS: "
       << (report.lms_parameter_efficient ? "yes" : "no") << "\n";
    return os.str();
}

}  // namespace lmsfd
