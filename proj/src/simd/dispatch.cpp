#include <atomic>
#include <string>

#include "tastenet/error.hpp"
#include "tastenet/simd/kernels.hpp"

namespace tastenet::simd {
namespace {

const KernelTable& table_for(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&table_for(best_isa())};
  return table;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return active_table().load(std::memory_order_acquire)->isa; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    fail(ErrorKind::argument,
         "instruction set '" + std::string(isa_name(isa)) + "' not supported by this CPU");
  }
  active_table().store(&table_for(isa), std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "auto") return best_isa();
  fail(ErrorKind::argument, "unknown instruction set '" + std::string(name) + "'");
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_acquire); }

}  // namespace tastenet::simd
