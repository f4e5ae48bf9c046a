#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dynbc {

// Compressed sparse row storage, square.
struct CsrMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }
};

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

// Duplicates are summed; columns sorted within each row.
CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> entries);

namespace kernels {

// Reductions are split into fixed blocks of this many entries and the block
// sums are added in order, so results do not depend on the thread count.
inline constexpr std::size_t reduction_block = 1024;

namespace serial {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double wdot(std::span<const double> w, std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double alpha, std::span<double> y);
void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y);
}  // namespace serial

namespace omp {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double wdot(std::span<const double> w, std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double alpha, std::span<double> y);
void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y);
}  // namespace omp

// Dispatching versions: OpenMP above parallel_threshold entries when built with it.
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double wdot(std::span<const double> w, std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);   // y += alpha x
void xpay(std::span<const double> x, double alpha, std::span<double> y);   // y = x + alpha y
void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y);  // y = d .* x

void set_threads(int n);
int max_threads();
bool openmp_enabled();
void set_parallel_threshold(std::size_t n);
std::size_t parallel_threshold();

}  // namespace kernels
}  // namespace dynbc
