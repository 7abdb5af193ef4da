#include "cumi/kernels.hpp"

#include <cstdlib>
#include <string>

namespace cumi::kern {

#if CUMI_HAVE_AVX2_BUILD
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if CUMI_HAVE_AVX2_BUILD
    return avx2_table_impl();
#else
    return nullptr;
#endif
}

namespace {

struct Selection {
    const KernelTable* table;
    const char* name;
};

Selection select() {
    const char* env = std::getenv("CUMI_SIMD");
    const std::string mode = env ? env : "auto";
    if (mode == "scalar") return {&scalar_table(), "scalar"};
    if (const KernelTable* v = avx2_table()) return {v, "avx2"};
    return {&scalar_table(), "scalar"};
}

const Selection& selection() {
    static const Selection s = select();
    return s;
}

}  // namespace

const KernelTable& active() { return *selection().table; }

const char* backend_name() { return selection().name; }

}  // namespace cumi::kern
