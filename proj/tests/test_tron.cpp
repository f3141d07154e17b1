#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "tron.hpp"

using namespace gridadmm;

namespace {

// Dense box-constrained quadratic ½xᵀQx − cᵀx.
class BoxQp final : public BoxNlp {
public:
    int n = 0;
    std::array<double, 16 * 16> Q{};
    std::array<double, 16> c{}, lo{}, hi{};

    int dim() const override { return n; }
    const double* lower() const override { return lo.data(); }
    const double* upper() const override { return hi.data(); }
    double value(const double* x) const override {
        double f = 0.0;
        for (int i = 0; i < n; ++i) {
            f -= c[i] * x[i];
            for (int j = 0; j < n; ++j) f += 0.5 * x[i] * Q[i * 16 + j] * x[j];
        }
        return f;
    }
    void gradient(const double* x, double* g) const override {
        for (int i = 0; i < n; ++i) {
            g[i] = -c[i];
            for (int j = 0; j < n; ++j) g[i] += Q[i * 16 + j] * x[j];
        }
    }
    void hessian(const double* x, double* h) const override {
        (void)x;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) h[i * n + j] = Q[i * 16 + j];
    }
};

BoxQp random_spd_qp(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BoxQp qp;
    qp.n = n;
    // Q = MᵀM + I: SPD with moderate conditioning.
    std::array<double, 16 * 16> m{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i * 16 + j] = u(rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = (i == j) ? 1.0 : 0.0;
            for (int k = 0; k < n; ++k) acc += m[k * 16 + i] * m[k * 16 + j];
            qp.Q[i * 16 + j] = acc;
        }
    for (int i = 0; i < n; ++i) {
        qp.c[i] = 2.0 * u(rng);
        qp.lo[i] = 0.0;
        qp.hi[i] = 1.0;
    }
    return qp;
}

// Solves the QP exactly by enumerating all 3^n active-set patterns
// (each coordinate: at lower bound, at upper bound, or free) and keeping the
// best feasible KKT-consistent candidate.
bool oracle_qp(const BoxQp& qp, double* best_x) {
    const int n = qp.n;
    int patterns = 1;
    for (int i = 0; i < n; ++i) patterns *= 3;

    double best_f = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int p = 0; p < patterns; ++p) {
        int code = p;
        std::array<int, 16> st{};
        std::vector<int> free_idx;
        std::array<double, 16> x{};
        for (int i = 0; i < n; ++i, code /= 3) {
            st[i] = code % 3;
            if (st[i] == 0)
                x[i] = qp.lo[i];
            else if (st[i] == 1)
                x[i] = qp.hi[i];
            else
                free_idx.push_back(i);
        }
        // Solve the free block: Q_ff x_f = c_f - Q_fa x_a.
        const int nf = static_cast<int>(free_idx.size());
        std::array<double, 16 * 17> aug{};
        for (int r = 0; r < nf; ++r) {
            const int i = free_idx[r];
            for (int s = 0; s < nf; ++s)
                aug[r * 17 + s] = qp.Q[i * 16 + free_idx[s]];
            double rhs = qp.c[i];
            for (int j = 0; j < n; ++j)
                if (st[j] != 2) rhs -= qp.Q[i * 16 + j] * x[j];
            aug[r * 17 + nf] = rhs;
        }
        bool singular = false;
        for (int col = 0; col < nf && !singular; ++col) {
            int piv = col;
            for (int r = col + 1; r < nf; ++r)
                if (std::abs(aug[r * 17 + col]) > std::abs(aug[piv * 17 + col]))
                    piv = r;
            if (std::abs(aug[piv * 17 + col]) < 1e-12) {
                singular = true;
                break;
            }
            for (int s = 0; s <= nf; ++s)
                std::swap(aug[col * 17 + s], aug[piv * 17 + s]);
            for (int r = col + 1; r < nf; ++r) {
                const double f = aug[r * 17 + col] / aug[col * 17 + col];
                for (int s = col; s <= nf; ++s) aug[r * 17 + s] -= f * aug[col * 17 + s];
            }
        }
        if (singular) continue;
        for (int r = nf - 1; r >= 0; --r) {
            double acc = aug[r * 17 + nf];
            for (int s = r + 1; s < nf; ++s) acc -= aug[r * 17 + s] * x[free_idx[s]];
            x[free_idx[r]] = acc / aug[r * 17 + r];
        }
        // Feasibility and KKT sign checks.
        bool ok = true;
        std::array<double, 16> g{};
        qp.gradient(x.data(), g.data());
        for (int i = 0; i < n && ok; ++i) {
            if (x[i] < qp.lo[i] - 1e-10 || x[i] > qp.hi[i] + 1e-10) ok = false;
            if (st[i] == 0 && g[i] < -1e-8) ok = false;
            if (st[i] == 1 && g[i] > 1e-8) ok = false;
        }
        if (!ok) continue;
        const double f = qp.value(x.data());
        if (f < best_f - 1e-14) {
            best_f = f;
            std::memcpy(best_x, x.data(), n * sizeof(double));
            found = true;
        }
    }
    return found;
}

}  // namespace

TEST_CASE("clamped unconstrained minimizer") {
    BoxQp qp;
    qp.n = 1;
    qp.Q[0] = 2.0;
    qp.c[0] = 6.0;  // (x-3)^2 up to a constant
    qp.lo[0] = 0.0;
    qp.hi[0] = 1.0;
    double x = 0.0;
    const TronResult r = solve_one(qp, &x, TronSettings{});
    CHECK(x == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.status == TronStatus::Converged);
}

TEST_CASE("negative curvature runs to the best bound") {
    BoxQp qp;
    qp.n = 1;
    qp.Q[0] = -2.0;  // -x^2
    qp.c[0] = 0.0;
    qp.lo[0] = -1.0;
    qp.hi[0] = 2.0;
    double x = 0.5;
    solve_one(qp, &x, TronSettings{});
    CHECK(x == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("random SPD box QPs match the active-set oracle") {
    std::mt19937 rng(123);
    TronSettings settings;
    settings.gtol = 1e-9;
    int solved = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const BoxQp qp = random_spd_qp(rng, 6);
        std::array<double, 16> expect{};
        if (!oracle_qp(qp, expect.data())) continue;
        std::array<double, 6> x{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
        solve_one(qp, x.data(), settings);
        for (int i = 0; i < 6; ++i)
            CHECK(std::abs(x[i] - expect[i]) <= 1e-6);
        ++solved;
    }
    CHECK(solved == 200);
}

TEST_CASE("iterates stay inside the box") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const BoxQp qp = random_spd_qp(rng, 6);
        std::array<double, 6> x{};
        for (int i = 0; i < 6; ++i) x[i] = 0.5;
        solve_one(qp, x.data(), TronSettings{});
        for (int i = 0; i < 6; ++i) {
            CHECK(x[i] >= qp.lo[i]);
            CHECK(x[i] <= qp.hi[i]);
        }
    }
}

TEST_CASE("KKT conditions hold at convergence") {
    std::mt19937 rng(7);
    TronSettings settings;
    for (int trial = 0; trial < 50; ++trial) {
        const BoxQp qp = random_spd_qp(rng, 6);
        std::array<double, 6> x{};
        for (int i = 0; i < 6; ++i) x[i] = 0.5;
        const TronResult r = solve_one(qp, x.data(), settings);
        REQUIRE(r.status == TronStatus::Converged);
        std::array<double, 6> g{};
        qp.gradient(x.data(), g.data());
        for (int i = 0; i < 6; ++i) {
            const bool at_lo = x[i] <= qp.lo[i] + 1e-12;
            const bool at_hi = x[i] >= qp.hi[i] - 1e-12;
            if (at_lo)
                CHECK(g[i] >= -1e-6);
            else if (at_hi)
                CHECK(g[i] <= 1e-6);
            else
                CHECK(std::abs(g[i]) <= 1e-6);
        }
    }
}

TEST_CASE("batch equals individual solves and is worker-count invariant") {
    std::mt19937 rng(2024);
    std::vector<BoxQp> qps;
    for (int i = 0; i < 64; ++i) qps.push_back(random_spd_qp(rng, 6));

    auto run = [&](int workers) {
        std::vector<std::array<double, 6>> pts(qps.size());
        std::vector<BatchItem> items(qps.size());
        for (size_t i = 0; i < qps.size(); ++i) {
            pts[i].fill(0.5);
            items[i] = {&qps[i], pts[i].data()};
        }
        solve_batch(items, TronSettings{}, workers);
        return pts;
    };
    const auto w1 = run(1);
    const auto w8 = run(8);
    REQUIRE(w1.size() == w8.size());
    for (size_t i = 0; i < w1.size(); ++i)
        CHECK(std::memcmp(w1[i].data(), w8[i].data(), sizeof w1[i]) == 0);

    // individual solves match the batch bit-for-bit
    for (size_t i = 0; i < qps.size(); ++i) {
        std::array<double, 6> x;
        x.fill(0.5);
        solve_one(qps[i], x.data(), TronSettings{});
        CHECK(std::memcmp(x.data(), w1[i].data(), sizeof x) == 0);
    }
}

TEST_CASE("empty batch") {
    CHECK(solve_batch({}, TronSettings{}, 4).empty());
}
