#include "ris_sensing/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "ris_sensing/errors.hpp"
#include "ris_sensing/experiment.hpp"
#include "ris_sensing/random.hpp"
#include "ris_sensing/tensor.hpp"

namespace ris {

namespace {

std::string fmt(const char* what, double v)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.3g", what, v);
    return buf;
}

double rel(const ComplexMatrix& a, const ComplexMatrix& b)
{
    const double n = b.norm();
    return n > 0.0 ? (a - b).norm() / n : (a - b).norm();
}

SelftestResult check_unfold(SelftestFault fault)
{
    Rng rng(11);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Index I1 = 2 + t % 3, I2 = 3 + t % 2, I3 = 2 + t % 4;
        ComplexTensor3 X(I1, I2, I3);
        for (Index k = 0; k < I3; ++k)
            for (Index j = 0; j < I2; ++j)
                for (Index i = 0; i < I1; ++i)
                    X(i, j, k) = complex_gaussian(rng);
        for (int mode = 1; mode <= 3; ++mode) {
            ComplexMatrix U = unfold(X, mode);
            if (fault == SelftestFault::Unfold) U.col(0).swap(U.col(1));
            // entrywise definition
            for (Index k = 0; k < I3; ++k)
                for (Index j = 0; j < I2; ++j)
                    for (Index i = 0; i < I1; ++i) {
                        cplx u;
                        if (mode == 1) u = U(i, j + I2 * k);
                        else if (mode == 2) u = U(j, i + I1 * k);
                        else u = U(k, i + I1 * j);
                        worst = std::max(worst, std::abs(u - X(i, j, k)));
                    }
            const ComplexTensor3 back = fold(U, mode, X.dims());
            for (Index k = 0; k < I3; ++k)
                for (Index j = 0; j < I2; ++j)
                    for (Index i = 0; i < I1; ++i)
                        worst = std::max(worst, std::abs(back(i, j, k) - X(i, j, k)));
        }
    }
    return {"unfold", worst < 1e-12, fmt("max abs deviation", worst)};
}

SelftestResult check_products()
{
    Rng rng(12);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const ComplexMatrix A = random_complex_matrix(3, 4, rng);
        const ComplexMatrix B = random_complex_matrix(4, 5, rng);
        const ComplexMatrix C = random_complex_matrix(5, 2, rng);
        const ComplexVector b = random_complex_matrix(4, 1, rng);
        const ComplexMatrix D = random_complex_matrix(4, 2, rng);
        // vec(ABC) = (C^T kron A) vec(B)
        worst = std::max(worst, rel(kronecker(C.transpose(), A) * vec(B), vec(A * B * C)));
        // vec(A D(b) D) = (D^T kr A) b
        worst = std::max(worst, rel(khatri_rao(D.transpose(), A) * b, vec(A * b.asDiagonal() * D)));
        // a^T kr B = B D(a)
        const ComplexVector a = random_complex_matrix(5, 1, rng);
        worst = std::max(worst, rel(khatri_rao(a.transpose(), B), B * a.asDiagonal()));
    }
    return {"product_identities", worst < 1e-12, fmt("max relative deviation", worst)};
}

SelftestResult check_esprit()
{
    double worst = 0.0;
    for (Index P : {4, 8, 16, 64}) {
        for (int g = 0; g < 64; ++g) {
            const double w = -kPi + (g + 0.5) * (2.0 * kPi / 64.0);
            ComplexVector x(P);
            for (Index p = 0; p < P; ++p) x(p) = std::polar(1.3, 0.4 + w * static_cast<double>(p));
            worst = std::max(worst, std::abs(esprit_1d(x) - w));
        }
    }
    Rng rng(13);
    std::uniform_real_distribution<double> u(-0.95 * kPi, 0.95 * kPi);
    for (int t = 0; t < 20; ++t) {
        const double mu = u(rng), psi = u(rng);
        const ComplexVector p = upa_steering(mu, psi, 4, 4);
        const SpatialFrequencies sf = esprit_2d(kronecker(p, p), 4, 4);
        worst = std::max({worst, std::abs(*sf.mu - mu), std::abs(*sf.psi - psi)});
    }
    return {"esprit", worst < 1e-10, fmt("max frequency error", worst)};
}

SelftestResult check_recovery()
{
    const ScenarioConfig cfg = ScenarioConfig::desk();
    AlsSettings als;
    als.max_iters = 500;
    const TrialOutcome out = run_trial(cfg, als, 300.0, TrialSeeds::derive(2024, 0, 0));
    if (out.failed()) return {"noiseless_recovery", false, out.failure};
    double worst = 0.0;
    for (double e : *out.estimate->relative_sq_error) worst = std::max(worst, std::sqrt(e));
    return {"noiseless_recovery", worst < 1e-6, fmt("max relative error", worst)};
}

} // namespace

SelftestFault parse_selftest_fault(const std::string& text)
{
    if (text == "none") return SelftestFault::None;
    if (text == "unfold") return SelftestFault::Unfold;
    throw UsageError("unknown fault '" + text + "' (expected unfold)");
}

std::vector<SelftestResult> run_selftest(SelftestFault fault)
{
    std::vector<SelftestResult> results;
    const std::vector<std::function<SelftestResult()>> checks = {
        [fault] { return check_unfold(fault); },
        check_products,
        check_esprit,
        check_recovery,
    };
    for (const auto& check : checks) {
        try {
            results.push_back(check());
        } catch (const std::exception& e) {
            results.push_back({"?", false, e.what()});
        }
    }
    return results;
}

} // namespace ris
