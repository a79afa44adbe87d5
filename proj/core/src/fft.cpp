#include "abctorus/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include "abctorus/errors.hpp"

namespace abctorus {

namespace {

/// One cached FFTW plan together with the aligned buffers it was created on.
/// Execution copies through the owned buffers; that keeps the alignment
/// contract trivially satisfied and costs little next to the transform.
struct PlanSlot {
  fftw_plan plan = nullptr;
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  std::size_t count = 0;

  ~PlanSlot() {
    if (plan) fftw_destroy_plan(plan);
    if (in) fftw_free(in);
    if (out) fftw_free(out);
  }
};

std::mutex g_mutex;
std::map<std::tuple<int, int, bool>, PlanSlot> g_plans;

PlanSlot& plan_for(int rank, int G, bool forward) {
  auto key = std::make_tuple(rank, G, forward);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;

  PlanSlot& slot = g_plans[key];
  std::size_t count = 1;
  int dims[3] = {G, G, G};
  for (int i = 0; i < rank; ++i) count *= static_cast<std::size_t>(G);
  slot.count = count;
  slot.in = fftw_alloc_complex(count);
  slot.out = fftw_alloc_complex(count);
  slot.plan = fftw_plan_dft(rank, dims, slot.in, slot.out,
                            forward ? FFTW_FORWARD : FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  if (!slot.plan) throw Error(FailKind::Numerical, "fftw plan creation failed");
  return slot;
}

}  // namespace

void fft(int rank, int G, const std::complex<double>* in,
         std::complex<double>* out, bool forward) {
  if (rank < 1 || rank > 3)
    throw DimensionMismatch("fft rank must be 1..3, got " + std::to_string(rank));
  std::lock_guard<std::mutex> lock(g_mutex);
  PlanSlot& slot = plan_for(rank, G, forward);
  std::memcpy(static_cast<void*>(slot.in), static_cast<const void*>(in),
              slot.count * sizeof(fftw_complex));
  fftw_execute(slot.plan);
  std::memcpy(static_cast<void*>(out), static_cast<const void*>(slot.out),
              slot.count * sizeof(fftw_complex));
}

}  // namespace abctorus
