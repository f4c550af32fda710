#pragma once

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "magframe/grid.hpp"

namespace magframe {

namespace detail {
// FFTW plan creation/destruction is not thread-safe; execution is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// In-place FFT along one axis of a row-major multi-dimensional complex array.
// sign: FFTW_FORWARD (-1) or FFTW_BACKWARD (+1). Unnormalized, like FFTW.
inline void fft_axis(cplx* data, const std::vector<int>& dims, int axis, int sign) {
  int n = dims[axis];
  std::int64_t inner = 1, outer = 1;
  for (size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];
  for (int i = 0; i < axis; ++i) outer *= dims[i];

  auto* ptr = reinterpret_cast<fftw_complex*>(data);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    plan = fftw_plan_many_dft(
        1, &n, static_cast<int>(inner), ptr, nullptr, static_cast<int>(inner), 1,
        ptr, nullptr, static_cast<int>(inner), 1, sign, FFTW_ESTIMATE);
  }
  for (std::int64_t o = 0; o < outer; ++o)
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data + o * n * inner),
                     reinterpret_cast<fftw_complex*>(data + o * n * inner));
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
}

// Multiply by (-1)^(index along axis).
inline void alternate_sign_axis(cplx* data, const std::vector<int>& dims, int axis) {
  int n = dims[axis];
  std::int64_t inner = 1, outer = 1;
  for (size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];
  for (int i = 0; i < axis; ++i) outer *= dims[i];
  for (std::int64_t o = 0; o < outer; ++o)
    for (int j = 1; j < n; j += 2) {
      cplx* row = data + (o * n + j) * inner;
      for (std::int64_t i = 0; i < inner; ++i) row[i] = -row[i];
    }
}

// Shift trigonometric interpolant along one axis of a centered grid by `s`:
// out(x) = in(x + s), with centered modes xi_k = (k - M/2) * (2*pi/(M*h)).
inline void spectral_shift_axis(cplx* data, const std::vector<int>& dims, int axis,
                                double h, double s) {
  int n = dims[axis];
  double hxi = 2.0 * pi / (n * h);
  alternate_sign_axis(data, dims, axis);
  fft_axis(data, dims, axis, FFTW_FORWARD);
  // apply e^{i*xi_k*s}/n along the axis
  std::int64_t inner = 1, outer = 1;
  for (size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];
  for (int i = 0; i < axis; ++i) outer *= dims[i];
  std::vector<cplx> ph(n);
  for (int k = 0; k < n; ++k)
    ph[k] = std::polar(1.0 / n, (k - n / 2) * hxi * s);
  for (std::int64_t o = 0; o < outer; ++o)
    for (int k = 0; k < n; ++k) {
      cplx* row = data + (o * n + k) * inner;
      for (std::int64_t i = 0; i < inner; ++i) row[i] *= ph[k];
    }
  fft_axis(data, dims, axis, FFTW_BACKWARD);
  alternate_sign_axis(data, dims, axis);
}

namespace detail {

// Shared core of the symplectic transform: one position/momentum axis pair.
// Input axes ordered [pos axes..., mom axes...] (possibly as part of a larger
// shape); applies masks, backward FFT on pos axes, forward FFT on mom axes,
// masks, and scales by (1/M)^d. The caller performs the block swap.
inline void symplectic_core(cplx* data, const std::vector<int>& dims,
                            const std::vector<int>& pos_axes,
                            const std::vector<int>& mom_axes) {
  double scale = 1.0;
  for (int a : pos_axes) {
    alternate_sign_axis(data, dims, a);
    scale /= dims[a];
  }
  for (int a : mom_axes) alternate_sign_axis(data, dims, a);
  for (int a : pos_axes) fft_axis(data, dims, a, FFTW_BACKWARD);
  for (int a : mom_axes) fft_axis(data, dims, a, FFTW_FORWARD);
  for (int a : pos_axes) alternate_sign_axis(data, dims, a);
  for (int a : mom_axes) alternate_sign_axis(data, dims, a);
  std::int64_t total = 1;
  for (int d : dims) total *= d;
  for (std::int64_t i = 0; i < total; ++i) data[i] *= scale;
}

}  // namespace detail

// (F_sigma f)(X) = (2*pi)^{-d} \int dY e^{+i sigma(X,Y)} f(Y), discretized so
// that the transform is an exact involution on the FFT-dual phase grid.
inline PhaseField symplectic_fourier(const PhaseField& f) {
  int d = f.grid.pos.dim;
  int M = f.grid.pos.points;
  std::vector<int> dims(2 * d, M);
  PhaseField tmp = f;
  std::vector<int> pos_axes, mom_axes;
  for (int i = 0; i < d; ++i) pos_axes.push_back(i);
  for (int i = 0; i < d; ++i) mom_axes.push_back(d + i);
  detail::symplectic_core(tmp.v.data(), dims, pos_axes, mom_axes);

  // After the transforms, the leading block indexes the output momentum and
  // the trailing block the output position; swap them back to position-major.
  PhaseField out(f.grid);
  std::int64_t P = f.grid.pos.size();
  for (std::int64_t b = 0; b < P; ++b)
    for (std::int64_t a = 0; a < P; ++a)
      out.v[a * P + b] = tmp.v[b * P + a];
  return out;
}

// (F_Sigma F)(X_L, X_R): the symplectic transform applied in both blocks.
inline DoublePhaseField double_symplectic_fourier(const DoublePhaseField& F) {
  int d = F.grid.pos.dim;
  int M = F.grid.pos.points;
  std::vector<int> dims(4 * d, M);  // [xL, xiL, xR, xiR] axes
  DoublePhaseField tmp = F;
  std::vector<int> pos_axes, mom_axes;
  for (int i = 0; i < d; ++i) pos_axes.push_back(i);          // xL
  for (int i = 0; i < d; ++i) mom_axes.push_back(d + i);      // xiL
  for (int i = 0; i < d; ++i) pos_axes.push_back(2 * d + i);  // xR
  for (int i = 0; i < d; ++i) mom_axes.push_back(3 * d + i);  // xiR
  detail::symplectic_core(tmp.v.data(), dims, pos_axes, mom_axes);

  // Swap x<->xi blocks within each of the L and R halves.
  DoublePhaseField out(F.grid);
  std::int64_t P = F.grid.pos.size();  // = mom size per block
  for (std::int64_t aL = 0; aL < P; ++aL)
    for (std::int64_t bL = 0; bL < P; ++bL)
      for (std::int64_t aR = 0; aR < P; ++aR)
        for (std::int64_t bR = 0; bR < P; ++bR)
          out.v[((aL * P + bL) * P + aR) * P + bR] =
              tmp.v[((bL * P + aL) * P + bR) * P + aR];
  return out;
}

}  // namespace magframe
