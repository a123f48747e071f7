#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "bwpart/kernels.hpp"

namespace bwpart::kernels {

#if defined(BWPART_HAVE_AVX2)
const KernelSet& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(BWPART_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelSet* widest() {
  if (const KernelSet* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

const KernelSet* initial_selection() {
  if (const char* env = std::getenv("BWPART_ISA")) {
    const std::string v(env);
    if (v == "scalar") return &scalar_kernels();
    if (v == "avx2" && avx2_kernels()) return avx2_kernels();
  }
  return widest();
}

std::atomic<const KernelSet*>& current() {
  static std::atomic<const KernelSet*> selected{initial_selection()};
  return selected;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "scalar";
}

const KernelSet* avx2_kernels() {
#if defined(BWPART_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

bool available(Isa isa) { return isa == Isa::scalar || avx2_kernels() != nullptr; }

const KernelSet& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (!available(isa))
    throw std::invalid_argument("kernel ISA not available: " + std::string(to_string(isa)));
  current().store(isa == Isa::scalar ? &scalar_kernels() : avx2_kernels(),
                  std::memory_order_release);
}

void select_auto() { current().store(widest(), std::memory_order_release); }

}  // namespace bwpart::kernels
