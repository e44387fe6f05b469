#pragma once

#include <complex>
#include <memory>

#include <Eigen/Dense>

namespace rbc {

using cplx = std::complex<double>;

// Horizontally periodic, vertically bounded grid. Horizontal wavenumbers are
// stored in FFT order: index m carries n = m for m < Nx/2 and n = m - Nx
// otherwise, so n runs over [-Nx/2, Nx/2) and m = Nx/2 is the Nyquist mode.
struct Grid {
  double L = 2.0;
  int Nx = 0;
  int Nz = 0;
  double H = 1.0;  // vertical extent, z in [0, H]
  Eigen::VectorXd z_nodes;
  Eigen::VectorXd k_values;
  Eigen::MatrixXd D1;  // d/dz on z_nodes
  Eigen::MatrixXd D2;
  Eigen::VectorXd quad_weights;  // Clenshaw-Curtis on [0, H]

  int wavenumber_index(int m) const { return m < Nx / 2 ? m : m - Nx; }
  int mode_slot(int n) const { return n >= 0 ? n : n + Nx; }
  int nyquist_slot() const { return Nx / 2; }
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(double L, int Nx, int Nz, double H = 1.0);

struct PhysicalField {
  GridPtr grid;
  Eigen::MatrixXd values;  // Nx x Nz, values(i, j) at x_i = i L / Nx, z_j

  PhysicalField() = default;
  explicit PhysicalField(GridPtr g);
  PhysicalField(GridPtr g, Eigen::MatrixXd v) : grid(std::move(g)), values(std::move(v)) {}
};

struct ModalField {
  GridPtr grid;
  Eigen::MatrixXcd coeffs;  // Nx x Nz, row = wavenumber slot, column = z node

  ModalField() = default;
  explicit ModalField(GridPtr g);
  ModalField(GridPtr g, Eigen::MatrixXcd c) : grid(std::move(g)), coeffs(std::move(c)) {}

  // Vertical profile of wavenumber index n in [-Nx/2, Nx/2).
  Eigen::VectorXcd profile(int n) const;
  void set_profile(int n, const Eigen::VectorXcd& p);
};

Eigen::VectorXd x_nodes(const Grid& g);

// c_n(z) = (1/Nx) sum_i f(x_i, z) exp(-i k_n x_i)
ModalField forward_transform(const PhysicalField& f);
PhysicalField inverse_transform(const ModalField& f);

// Largest |c_n - conj(c_{-n})| relative to the largest coefficient.
double hermitian_defect(const ModalField& f);

// Multiplies by (i k)^order; odd orders zero the Nyquist slot so that real
// fields stay real.
ModalField horizontal_derivative(const ModalField& f, int order);
ModalField vertical_derivative(const ModalField& f, int order);

// Multiplies by |k|^(2 power), power in {1/2, -1/2, 1, -1}.
ModalField fractional_laplacian_half(const ModalField& f, double power);

// Sample a physical field on an Nx * oversample horizontal grid by zero
// padding, then return the per-z mean of |f|. Used for <|f|>'.
Eigen::VectorXd horizontal_abs_mean(const ModalField& f, int oversample = 4);

// Exact horizontal mean of the product of two real fields (Parseval).
Eigen::VectorXd horizontal_product_mean(const ModalField& a, const ModalField& b);

// Low-level batched real FFT along x for Nz columns. Spectral data uses the
// half spectrum (Nx/2 + 1 rows), normalized as forward_transform.
class HorizontalFft {
 public:
  HorizontalFft(int Nx, int howmany);
  ~HorizontalFft();
  HorizontalFft(const HorizontalFft&) = delete;
  HorizontalFft& operator=(const HorizontalFft&) = delete;

  // phys: Nx x howmany; half: (Nx/2+1) x howmany
  void forward(const Eigen::MatrixXd& phys, Eigen::MatrixXcd& half);
  void inverse(const Eigen::MatrixXcd& half, Eigen::MatrixXd& phys);

  int nx() const { return nx_; }

 private:
  int nx_;
  int howmany_;
  void* fwd_;
  void* inv_;
  Eigen::MatrixXd rbuf_;
  Eigen::MatrixXcd cbuf_;
};

}  // namespace rbc
