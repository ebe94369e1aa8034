#include "ssgait/layers.hpp"

#include <algorithm>
#include <cmath>

#include "ssgait/errors.hpp"

namespace ssgait {

Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& b, int pad) {
  const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin) throw ShapeMismatch("conv2d: kernel expects " + std::to_string(w.dim(1)) +
                                           " input channels, got " + std::to_string(cin));
  const int oh = h + 2 * pad - kh + 1, ow = wd + 2 * pad - kw + 1;
  if (oh < 1 || ow < 1) throw ShapeMismatch("conv2d: kernel larger than padded input");

  Tensor out({cout, oh, ow});
  for (int oc = 0; oc < cout; ++oc) {
    double* oplane = out.data() + static_cast<std::int64_t>(oc) * oh * ow;
    std::fill(oplane, oplane + static_cast<std::int64_t>(oh) * ow, b(oc));
    for (int ic = 0; ic < cin; ++ic) {
      const double* iplane = in.data() + static_cast<std::int64_t>(ic) * h * wd;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const double wv = w(oc, ic, ky, kx);
          const int dx = kx - pad;
          const int y0 = std::max(0, pad - ky), y1 = std::min(oh, h + pad - ky);
          const int x0 = std::max(0, -dx), x1 = std::min(ow, wd - dx);
          for (int y = y0; y < y1; ++y) {
            const double* irow = iplane + static_cast<std::int64_t>(y + ky - pad) * wd;
            double* orow = oplane + static_cast<std::int64_t>(y) * ow;
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x + dx];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& in, const Tensor& w, int pad, const Tensor& gout,
                     Tensor* gin, Tensor& gw, Tensor& gb) {
  const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = gout.dim(1), ow = gout.dim(2);

  for (int oc = 0; oc < cout; ++oc) {
    const double* gplane = gout.data() + static_cast<std::int64_t>(oc) * oh * ow;
    double acc = 0.0;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) acc += gplane[i];
    gb(oc) += acc;

    for (int ic = 0; ic < cin; ++ic) {
      const double* iplane = in.data() + static_cast<std::int64_t>(ic) * h * wd;
      double* giplane = gin ? gin->data() + static_cast<std::int64_t>(ic) * h * wd : nullptr;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const int dx = kx - pad;
          const int y0 = std::max(0, pad - ky), y1 = std::min(oh, h + pad - ky);
          const int x0 = std::max(0, -dx), x1 = std::min(ow, wd - dx);
          double gwv = 0.0;
          const double wv = w(oc, ic, ky, kx);
          for (int y = y0; y < y1; ++y) {
            const double* irow = iplane + static_cast<std::int64_t>(y + ky - pad) * wd;
            const double* grow = gplane + static_cast<std::int64_t>(y) * ow;
            double dot = 0.0;
            for (int x = x0; x < x1; ++x) dot += grow[x] * irow[x + dx];
            gwv += dot;
            if (giplane) {
              double* girow = giplane + static_cast<std::int64_t>(y + ky - pad) * wd;
              for (int x = x0; x < x1; ++x) girow[x + dx] += wv * grow[x];
            }
          }
          gw(oc, ic, ky, kx) += gwv;
        }
      }
    }
  }
}

void lrelu_inplace(Tensor& x, double alpha) {
  double* p = x.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) {
    if (p[i] < 0.0) p[i] *= alpha;
  }
}

void lrelu_backward_inplace(const Tensor& act, Tensor& g, double alpha) {
  const double* a = act.data();
  double* p = g.data();
  const std::int64_t n = g.size();
  for (std::int64_t i = 0; i < n; ++i) {
    if (a[i] < 0.0) p[i] *= alpha;
  }
}

Tensor maxpool2x2_forward(const Tensor& in, std::vector<std::int32_t>& argmax) {
  const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeMismatch("maxpool2x2: spatial dims must be even, got " + in.shape_str());
  }
  const int oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  argmax.assign(static_cast<size_t>(c) * oh * ow, 0);
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = in.data() + static_cast<std::int64_t>(ch) * h * w;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        int best = (2 * y) * w + 2 * x;
        double bv = plane[best];
        const int cand[3] = {(2 * y) * w + 2 * x + 1, (2 * y + 1) * w + 2 * x,
                             (2 * y + 1) * w + 2 * x + 1};
        for (int idx : cand) {
          if (plane[idx] > bv) {
            bv = plane[idx];
            best = idx;
          }
        }
        out(ch, y, x) = bv;
        argmax[(static_cast<size_t>(ch) * oh + y) * ow + x] = best;
      }
    }
  }
  return out;
}

void maxpool2x2_backward(const std::vector<std::int32_t>& argmax, const Tensor& gout,
                         Tensor& gin) {
  const int c = gout.dim(0), oh = gout.dim(1), ow = gout.dim(2);
  const int h = gin.dim(1), w = gin.dim(2);
  (void)h;
  for (int ch = 0; ch < c; ++ch) {
    double* gplane = gin.data() + static_cast<std::int64_t>(ch) * h * w;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        gplane[argmax[(static_cast<size_t>(ch) * oh + y) * ow + x]] += gout(ch, y, x);
      }
    }
  }
}

void linear_forward(const Tensor& w, const Tensor& b, const double* x, double* y) {
  const int out = w.dim(0), in = w.dim(1);
  const double* wr = w.data();
  for (int o = 0; o < out; ++o, wr += in) {
    double acc = b(o);
    for (int i = 0; i < in; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(const Tensor& w, const double* x, const double* gy, Tensor& gw,
                     Tensor& gb, double* gx) {
  const int out = w.dim(0), in = w.dim(1);
  const double* wr = w.data();
  double* gwr = gw.data();
  for (int o = 0; o < out; ++o, wr += in, gwr += in) {
    const double g = gy[o];
    gb(o) += g;
    for (int i = 0; i < in; ++i) gwr[i] += g * x[i];
    if (gx) {
      for (int i = 0; i < in; ++i) gx[i] += g * wr[i];
    }
  }
}

void tconv_forward(const double* x, int T, int c, const Tensor& w, const Tensor& b,
                   double* y) {
  const int d = w.dim(0), taps = w.dim(1);
  const int r = (taps - 1) / 2;
  for (int t = 0; t < T; ++t) {
    double* yr = y + static_cast<std::int64_t>(t) * d;
    for (int o = 0; o < d; ++o) yr[o] = b(o);
    for (int j = 0; j < taps; ++j) {
      const int src = std::clamp(t + j - r, 0, T - 1);
      const double* xr = x + static_cast<std::int64_t>(src) * c;
      for (int o = 0; o < d; ++o) {
        const double* wr = w.data() + (static_cast<std::int64_t>(o) * taps + j) * c;
        double acc = 0.0;
        for (int i = 0; i < c; ++i) acc += wr[i] * xr[i];
        yr[o] += acc;
      }
    }
  }
}

void tconv_backward(const double* x, int T, int c, const Tensor& w, const double* gy,
                    Tensor& gw, Tensor& gb, double* gx) {
  const int d = w.dim(0), taps = w.dim(1);
  const int r = (taps - 1) / 2;
  for (int t = 0; t < T; ++t) {
    const double* gr = gy + static_cast<std::int64_t>(t) * d;
    for (int o = 0; o < d; ++o) gb(o) += gr[o];
    for (int j = 0; j < taps; ++j) {
      const int src = std::clamp(t + j - r, 0, T - 1);
      const double* xr = x + static_cast<std::int64_t>(src) * c;
      double* gxr = gx ? gx + static_cast<std::int64_t>(src) * c : nullptr;
      for (int o = 0; o < d; ++o) {
        const double g = gr[o];
        double* gwr = gw.data() + (static_cast<std::int64_t>(o) * taps + j) * c;
        const double* wr = w.data() + (static_cast<std::int64_t>(o) * taps + j) * c;
        for (int i = 0; i < c; ++i) gwr[i] += g * xr[i];
        if (gxr) {
          for (int i = 0; i < c; ++i) gxr[i] += g * wr[i];
        }
      }
    }
  }
}

void bn_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      double eps, double momentum, Tensor& run_mean, Tensor& run_var,
                      Tensor& y, BnTrace* tr) {
  const int rows = x.dim(0), cols = x.dim(1);
  if (rows < 2) {
    throw DegenerateBatch("batch norm needs >= 2 rows in training mode, got " +
                          std::to_string(rows));
  }
  y = Tensor({rows, cols});
  if (tr) {
    tr->xhat = Tensor({rows, cols});
    tr->inv_std = Tensor({cols});
  }
  for (int j = 0; j < cols; ++j) {
    double mean = 0.0;
    for (int i = 0; i < rows; ++i) mean += x(i, j);
    mean /= rows;
    double var = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= rows;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < rows; ++i) {
      const double xh = (x(i, j) - mean) * inv;
      if (tr) tr->xhat(i, j) = xh;
      y(i, j) = gamma(j) * xh + beta(j);
    }
    if (tr) tr->inv_std(j) = inv;
    const double unbiased = var * rows / (rows - 1);
    run_mean(j) = momentum * run_mean(j) + (1.0 - momentum) * mean;
    run_var(j) = momentum * run_var(j) + (1.0 - momentum) * unbiased;
  }
}

void bn_forward_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     double eps, const Tensor& run_mean, const Tensor& run_var,
                     Tensor& y) {
  const int rows = x.dim(0), cols = x.dim(1);
  y = Tensor({rows, cols});
  for (int j = 0; j < cols; ++j) {
    const double inv = 1.0 / std::sqrt(run_var(j) + eps);
    for (int i = 0; i < rows; ++i) {
      y(i, j) = gamma(j) * ((x(i, j) - run_mean(j)) * inv) + beta(j);
    }
  }
}

void bn_backward(const BnTrace& tr, const Tensor& gamma, const Tensor& gy, Tensor& gx,
                 Tensor& ggamma, Tensor& gbeta) {
  const int rows = tr.xhat.dim(0), cols = tr.xhat.dim(1);
  for (int j = 0; j < cols; ++j) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int i = 0; i < rows; ++i) {
      sum_g += gy(i, j);
      sum_gx += gy(i, j) * tr.xhat(i, j);
    }
    ggamma(j) += sum_gx;
    gbeta(j) += sum_g;
    const double scale = gamma(j) * tr.inv_std(j) / rows;
    for (int i = 0; i < rows; ++i) {
      gx(i, j) += scale * (rows * gy(i, j) - sum_g - tr.xhat(i, j) * sum_gx);
    }
  }
}

}  // namespace ssgait
