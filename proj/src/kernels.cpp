#include "lmsfd/kernels.hpp"

#include <cstdlib>

#include "lmsfd/errors.hpp"

namespace lmsfd::kernels {

#if defined(LMSFD_HAVE_AVX2_TABLE)
extern const KernelTable avx2_table;
#endif

namespace {

const KernelTable* avx2_if_supported() {
#if defined(LMSFD_HAVE_AVX2_TABLE)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return &avx2_table;
    }
#endif
    return nullptr;
}

const KernelTable* select() {
    if (const char* forced = std::getenv("LMSFD_KERNELS")) {
        return &by_name(forced);
    }
    if (const KernelTable* t = avx2_if_supported()) return t;
    return &scalar_table;
}

}  // namespace

const KernelTable& active() {
    static const KernelTable* table = select();
    return *table;
}

const KernelTable& by_name(const std::string& name) {
    if (name == "scalar") return scalar_table;
    if (name == "avx2") {
        if (const KernelTable* t = avx2_if_supported()) return *t;
        throw ConfigError("kernel table 'avx2' not available on this machine");
    }
    throw ConfigError("unknown kernel table '" + name + "'");
}

std::vector<std::string> available() {
    std::vector<std::string> names = {"scalar"};
    if (avx2_if_supported() != nullptr) names.push_back("avx2");
    return names;
}

}  // namespace lmsfd::kernels
