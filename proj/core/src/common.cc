#include "sharecause/common.h"

#include <charconv>
#include <cmath>

namespace sharecause {

double compensated_sum(const std::vector<double>& xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp_neg(double x) {
  // ln(1 + e^{-x}); for x << 0 this is -x + ln(1 + e^{x}).
  if (x >= 0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

std::string format_exact(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw NumericError("cannot format value");
  return std::string(buf, end);
}

}  // namespace sharecause
