#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "phantom/util/error.hpp"

namespace phantom::kernels {
namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("PHANTOM_KERNELS"); env != nullptr && *env != '\0')
    return &table(backend_from_string(env));
  return &table(best_backend());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

bool supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return detail::avx2_table() != nullptr && detail::cpu_has_avx2_fma();
    case Backend::neon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!supported(b))
    throw InvalidArgument("kernel backend '" + std::string(to_string(b)) +
                          "' is not available on this CPU/build");
  switch (b) {
    case Backend::avx2:
      return *detail::avx2_table();
    case Backend::neon:
      return *detail::neon_table();
    case Backend::scalar:
      break;
  }
  return detail::kScalarTable;
}

std::vector<Backend> supported_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
    if (supported(b)) out.push_back(b);
  return out;
}

Backend best_backend() {
  if (supported(Backend::avx2)) return Backend::avx2;
  if (supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void select(Backend b) { active_slot().store(&table(b)); }

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

Backend backend_from_string(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  if (name == "neon") return Backend::neon;
  throw InvalidArgument("unknown kernel backend '" + std::string(name) + "'");
}

}  // namespace phantom::kernels
