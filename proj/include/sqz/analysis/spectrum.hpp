#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sqz/nn/tensor.hpp"

namespace sqz::analysis {

// Spectral health summary of a batch of compressed latents. With Z a B x d
// batch and lambda_i = sigma_i^2 its squared singular values:
//   d_eff = (sum lambda)^2 / sum lambda^2   (1 when rank-1, d when isotropic)
//   kappa = sigma_max / sigma_min over the min(B, d) computed values
// lambda is taken from Z itself rather than the correlation matrix
// C = (1/B) Z^T Z: the 1/B factor cancels in both ratios, so reports are
// stable across batch sizes. offdiag_ratio summarizes C's redundancy as
// mean |off-diagonal| / mean |diagonal|.
struct SpectrumReport {
    std::vector<double> sigma; // descending, length min(B, d)
    double kappa = 0.0;        // +inf sentinel when sigma_min == 0
    double d_eff = 0.0;        // 0 only for an all-zero batch
    double offdiag_ratio = 0.0;
    size_t b = 0;
    size_t d_c = 0;
};

/// Rejects empty or non-finite input; a rank-1 tensor is treated as one row.
SpectrumReport spectrum(const nn::Tensor& z);

enum class RunOrder { AMoreEfficient, BMoreEfficient, Tie };
const char* run_order_name(RunOrder o);

/// Orders two reports of equal latent width: higher d_eff wins, kappa breaks
/// near-ties (lower wins), both with 1e-9 tolerance.
RunOrder compare_runs(const SpectrumReport& a, const SpectrumReport& b);

/// All fields as JSON; an infinite kappa is emitted as the string "inf".
std::string report_json(const SpectrumReport& r);
/// Human-readable summary (no sigma vector; that goes to the CSV).
std::string report_table(const SpectrumReport& r);
/// "index,sigma" rows for external plotting.
std::string sigma_csv(const SpectrumReport& r);

} // namespace sqz::analysis
