#include "dynbc/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef DYNBC_HAVE_OPENMP
#include <omp.h>
#endif

namespace dynbc {

CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> entries) {
    for (const auto& e : entries)
        if (e.row >= n || e.col >= n) throw std::out_of_range("csr_from_triplets: index out of range");
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CsrMatrix m;
    m.n = n;
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        if (!m.col.empty() && k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
            m.val.back() += e.value;
            continue;
        }
        m.col.push_back(e.col);
        m.val.push_back(e.value);
        m.row_ptr[e.row + 1]++;
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

namespace kernels {

namespace {
std::size_t g_threshold = 4096;

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("kernel size mismatch");
}
}  // namespace

namespace serial {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    check_sizes(a.n, x.size());
    check_sizes(a.n, y.size());
    for (std::size_t i = 0; i < a.n; ++i) {
        double s = 0.0;
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = s;
    }
}

// Blocked so that serial and OpenMP sums agree bit for bit.
double dot(std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    double total = 0.0;
    for (std::size_t b = 0; b < x.size(); b += reduction_block) {
        const std::size_t e = std::min(x.size(), b + reduction_block);
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += x[i] * y[i];
        total += s;
    }
    return total;
}

double wdot(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    check_sizes(w.size(), x.size());
    double total = 0.0;
    for (std::size_t b = 0; b < x.size(); b += reduction_block) {
        const std::size_t e = std::min(x.size(), b + reduction_block);
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += w[i] * x[i] * y[i];
        total += s;
    }
    return total;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpay(std::span<const double> x, double alpha, std::span<double> y) {
    check_sizes(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + alpha * y[i];
}

void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y) {
    check_sizes(d.size(), x.size());
    check_sizes(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = d[i] * x[i];
}

}  // namespace serial

namespace omp {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    check_sizes(a.n, x.size());
    check_sizes(a.n, y.size());
    const auto n = static_cast<std::ptrdiff_t>(a.n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = s;
    }
}

namespace {
template <class F>
double blocked_sum(std::size_t n, F&& term) {
    const std::size_t nblocks = (n + reduction_block - 1) / reduction_block;
    std::vector<double> partial(nblocks, 0.0);
    const auto nb = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * reduction_block;
        const std::size_t hi = std::min(n, lo + reduction_block);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[b] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}
}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    return blocked_sum(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
}

double wdot(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    check_sizes(w.size(), x.size());
    return blocked_sum(x.size(), [&](std::size_t i) { return w[i] * x[i] * y[i]; });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpay(std::span<const double> x, double alpha, std::span<double> y) {
    check_sizes(x.size(), y.size());
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + alpha * y[i];
}

void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y) {
    check_sizes(d.size(), x.size());
    check_sizes(x.size(), y.size());
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = d[i] * x[i];
}

}  // namespace omp

namespace {
bool use_omp(std::size_t n) {
#ifdef DYNBC_HAVE_OPENMP
    return n >= g_threshold;
#else
    (void)n;
    return false;
#endif
}
}  // namespace

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    use_omp(a.nnz()) ? omp::spmv(a, x, y) : serial::spmv(a, x, y);
}
double dot(std::span<const double> x, std::span<const double> y) {
    return use_omp(x.size()) ? omp::dot(x, y) : serial::dot(x, y);
}
double wdot(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
    return use_omp(x.size()) ? omp::wdot(w, x, y) : serial::wdot(w, x, y);
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    use_omp(x.size()) ? omp::axpy(alpha, x, y) : serial::axpy(alpha, x, y);
}
void xpay(std::span<const double> x, double alpha, std::span<double> y) {
    use_omp(x.size()) ? omp::xpay(x, alpha, y) : serial::xpay(x, alpha, y);
}
void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y) {
    use_omp(x.size()) ? omp::hadamard(d, x, y) : serial::hadamard(d, x, y);
}

void set_threads(int n) {
    if (n < 1) throw std::invalid_argument("thread count must be positive");
#ifdef DYNBC_HAVE_OPENMP
    omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef DYNBC_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool openmp_enabled() {
#ifdef DYNBC_HAVE_OPENMP
    return true;
#else
    return false;
#endif
}

void set_parallel_threshold(std::size_t n) { g_threshold = n; }
std::size_t parallel_threshold() { return g_threshold; }

}  // namespace kernels
}  // namespace dynbc
