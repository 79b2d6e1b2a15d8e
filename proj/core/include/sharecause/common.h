#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sharecause {

// Embedding and probability tables are stored row-major so that a user's or
// item's vector is contiguous.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Error families. The CLI maps ConfigError/ValidationError to exit status 1
// and NumericError (and any other runtime failure) to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Neumaier-compensated accumulator. Sums of many small terms (losses,
// metric means) stay reproducible to ~1 ulp regardless of magnitude spread.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(const std::vector<double>& xs);

// splitmix64 finalizer; used to derive independent per-repetition and
// per-stage seeds from one master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

double sigmoid(double x);

// -ln(sigmoid(x)) evaluated without overflow for large |x|.
double log1p_exp_neg(double x);

// Formats a double so that parsing it back yields the same bits.
std::string format_exact(double x);

}  // namespace sharecause
