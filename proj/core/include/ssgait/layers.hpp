#pragma once

#include <cstdint>
#include <vector>

#include "ssgait/tensor.hpp"

namespace ssgait {

// Layer primitives with hand-written backward passes. Convention: backward
// functions ACCUMULATE into every gradient output (parameter grads and input
// grads alike); callers zero buffers at the start of a step. Passing nullptr
// for an input-gradient skips its computation (first layer of a chain).

// 2-D convolution, stride 1, symmetric zero padding `pad`.
// in [Cin,H,W], w [Cout,Cin,kh,kw], b [Cout] -> out [Cout,H,W] for odd
// kernels with pad = k/2; general valid/padded sizes follow H+2p-kh+1.
Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& b, int pad);
void conv2d_backward(const Tensor& in, const Tensor& w, int pad, const Tensor& gout,
                     Tensor* gin, Tensor& gw, Tensor& gb);

// Leaky ReLU, slope alpha on the negative side. Backward reads the sign of
// the stored post-activation, which matches the pre-activation sign.
void lrelu_inplace(Tensor& x, double alpha);
void lrelu_backward_inplace(const Tensor& act, Tensor& g, double alpha);

// 2x2 max pooling, stride 2. H and W must be even. argmax holds, per output
// element, the flat y*W+x position of the winner inside its input plane.
Tensor maxpool2x2_forward(const Tensor& in, std::vector<std::int32_t>& argmax);
void maxpool2x2_backward(const std::vector<std::int32_t>& argmax, const Tensor& gout,
                         Tensor& gin);

// Dense map y = W x + b with W [out,in]. Raw pointers so stripe rows can be
// addressed inside larger tensors without copies.
void linear_forward(const Tensor& w, const Tensor& b, const double* x, double* y);
void linear_backward(const Tensor& w, const double* x, const double* gy, Tensor& gw,
                     Tensor& gb, double* gx);

// 1-D temporal convolution over a [T,c] sequence with kernel w [d,2r+1,c],
// replicate (edge-clamp) padding, bias b [d] -> y [T,d]. Replicate padding
// keeps a temporally constant input exactly constant in the output.
void tconv_forward(const double* x, int T, int c, const Tensor& w, const Tensor& b,
                   double* y);
void tconv_backward(const double* x, int T, int c, const Tensor& w, const double* gy,
                    Tensor& gw, Tensor& gb, double* gx);

// Batch normalization over the rows of x [B,F], independently per column.
// Training mode normalizes by biased batch statistics and folds them into the
// running estimates as run = m*run + (1-m)*batch (unbiased variance in the
// running estimate). B must be >= 2 in training mode.
struct BnTrace {
  Tensor xhat;     // [B,F]
  Tensor inv_std;  // [F]
};

void bn_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      double eps, double momentum, Tensor& run_mean, Tensor& run_var,
                      Tensor& y, BnTrace* tr);
void bn_forward_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     double eps, const Tensor& run_mean, const Tensor& run_var,
                     Tensor& y);
void bn_backward(const BnTrace& tr, const Tensor& gamma, const Tensor& gy, Tensor& gx,
                 Tensor& ggamma, Tensor& gbeta);

}  // namespace ssgait
