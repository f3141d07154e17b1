#ifndef GRIDADMM_TRON_HPP
#define GRIDADMM_TRON_HPP

#include <cstddef>
#include <vector>

namespace gridadmm {

// Bound-constrained dense NLP of dimension <= kMaxDim.  Callbacks must be
// const and thread-safe; the Hessian is returned row-major and symmetric.
class BoxNlp {
public:
    static constexpr int kMaxDim = 16;

    virtual ~BoxNlp() = default;
    virtual int dim() const = 0;
    virtual const double* lower() const = 0;
    virtual const double* upper() const = 0;
    virtual double value(const double* x) const = 0;
    virtual void gradient(const double* x, double* g) const = 0;
    virtual void hessian(const double* x, double* h) const = 0;
};

struct TronSettings {
    double gtol = 1e-6;        // projected-gradient inf-norm tolerance
    int max_iterations = 200;  // outer trust-region iterations
    double cg_tol = 0.1;       // relative CG residual tolerance
    int max_cg = 32;           // CG iterations per subspace solve
    double delta_floor = 1e-3; // lower bound on the initial trust radius
};

enum class TronStatus { Converged, IterationLimit, NumericalError };

struct TronResult {
    TronStatus status = TronStatus::Converged;
    int iterations = 0;
    double objective = 0.0;
    double projected_gradient = 0.0;
};

// Trust-region Newton with Cauchy-point breakpoint search, preconditioned
// CG on the free subspace (negative curvature followed to the boundary)
// and a projected line search.  x is the start point and receives the
// solution; it is clipped into the box before use.
TronResult solve_one(const BoxNlp& problem, double* x, const TronSettings& settings);

struct BatchItem {
    const BoxNlp* problem = nullptr;
    double* x = nullptr;  // in: start point, out: solution
};

// Independent solves distributed over `workers` threads.  Result k is
// identical to solve_one on item k regardless of the worker count.
std::vector<TronResult> solve_batch(const std::vector<BatchItem>& items,
                                    const TronSettings& settings, int workers);

}  // namespace gridadmm

#endif
