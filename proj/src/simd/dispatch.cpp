#include <atomic>
#include <cstdlib>
#include <string>

#include "polerisk/simd/kernels.hpp"

namespace polerisk::simd {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && detail::avx2_table() != nullptr;
#else
    return false;
#endif
}

Isa initial_isa() {
    if (const char* env = std::getenv("POLERISK_SIMD")) {
        if (std::string(env) == "scalar") return Isa::scalar;
    }
    return detected_isa();
}

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
    static const Isa isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
    return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
    active().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Isa isa) {
    if (isa == Isa::avx2 && detected_isa() == Isa::avx2) return *detail::avx2_table();
    return detail::scalar_table();
}

const KernelTable& kernels() { return kernels_for(active_isa()); }

}  // namespace polerisk::simd
