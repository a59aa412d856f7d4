#include "sqz/analysis/spectrum.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

#include "sqz/core/error.hpp"
#include "sqz/nn/kernels.hpp"
#include "sqz/nn/svd.hpp"

namespace sqz::analysis {

SpectrumReport spectrum(const nn::Tensor& z) {
    nn::Tensor zz = z;
    if (zz.rank() == 1) zz.shape = {1, zz.numel()};
    if (zz.rank() != 2 || zz.rows() == 0 || zz.cols() == 0)
        throw ShapeError("spectrum needs a non-empty latent batch");
    zz.require_finite("latent batch");

    SpectrumReport r;
    r.b = zz.rows();
    r.d_c = zz.cols();
    r.sigma = nn::svd(zz).sigma;

    double sum = 0.0, sum_sq = 0.0;
    for (double s : r.sigma) {
        const double lambda = s * s;
        sum += lambda;
        sum_sq += lambda * lambda;
    }
    r.d_eff = sum > 0.0 ? sum * sum / sum_sq : 0.0;
    r.kappa = r.sigma.back() > 0.0 ? r.sigma.front() / r.sigma.back()
                                   : std::numeric_limits<double>::infinity();

    // C = (1/B) Z^T Z; the scale cancels in the ratio but matches the report.
    const size_t d = r.d_c;
    nn::Tensor c = nn::Tensor::zeros({d, d});
    nn::gemm_tn(zz.data.data(), zz.data.data(), c.data.data(), r.b, d, d);
    double diag = 0.0, off = 0.0;
    for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j < d; ++j) (i == j ? diag : off) += std::abs(c.at(i, j));
    diag /= static_cast<double>(d);
    if (d > 1) off /= static_cast<double>(d * d - d);
    r.offdiag_ratio = diag > 0.0 ? off / diag : 0.0;
    return r;
}

const char* run_order_name(RunOrder o) {
    switch (o) {
    case RunOrder::AMoreEfficient: return "a_more_efficient";
    case RunOrder::BMoreEfficient: return "b_more_efficient";
    default: return "tie";
    }
}

RunOrder compare_runs(const SpectrumReport& a, const SpectrumReport& b) {
    if (a.d_c != b.d_c) throw ShapeError("reports with different latent widths are not comparable");
    constexpr double kTol = 1e-9;
    if (a.d_eff > b.d_eff + kTol) return RunOrder::AMoreEfficient;
    if (b.d_eff > a.d_eff + kTol) return RunOrder::BMoreEfficient;
    if (a.kappa + kTol < b.kappa) return RunOrder::AMoreEfficient;
    if (b.kappa + kTol < a.kappa) return RunOrder::BMoreEfficient;
    return RunOrder::Tie;
}

std::string report_json(const SpectrumReport& r) {
    nlohmann::json j;
    j["b"] = r.b;
    j["d_c"] = r.d_c;
    j["d_eff"] = r.d_eff;
    if (std::isinf(r.kappa))
        j["kappa"] = "inf";
    else
        j["kappa"] = r.kappa;
    j["offdiag_ratio"] = r.offdiag_ratio;
    j["sigma"] = r.sigma;
    return j.dump(2) + "\n";
}

std::string report_table(const SpectrumReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "latent batch %zu x %zu\n"
                  "  d_eff          %.6g\n"
                  "  kappa          %.6g\n"
                  "  offdiag_ratio  %.6g\n"
                  "  sigma_max      %.6g\n"
                  "  sigma_min      %.6g\n",
                  r.b, r.d_c, r.d_eff, r.kappa, r.offdiag_ratio, r.sigma.front(), r.sigma.back());
    return buf;
}

std::string sigma_csv(const SpectrumReport& r) {
    std::string out = "index,sigma\n";
    char row[64];
    for (size_t i = 0; i < r.sigma.size(); ++i) {
        std::snprintf(row, sizeof(row), "%zu,%.17g\n", i, r.sigma[i]);
        out += row;
    }
    return out;
}

} // namespace sqz::analysis
