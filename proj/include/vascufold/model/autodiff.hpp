#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vascufold/core/ndarray.hpp"

namespace vf {

using Tensor = NdArray<double>;

// Reverse-mode tape. Nodes are created in forward order; backward() walks
// them in reverse, each node scattering into its parents' grads. All values
// are f64; every op's accumulation order is fixed, so runs are repeatable.
class Tape {
public:
    int add(Tensor value, std::function<void(Tape&, int)> backward = nullptr) {
        nodes_.push_back({std::move(value), Tensor(), std::move(backward)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    Tensor& val(int id) { return nodes_[static_cast<size_t>(id)].value; }

    Tensor& grad(int id) {
        auto& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.empty()) n.grad = Tensor(n.value.dims());
        return n.grad;
    }
    bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.empty(); }

    void backward(int loss_id);

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, int)> back;
    };
    std::vector<Node> nodes_;
};

// ---- ops (all return the new node id) -------------------------------------

int constant(Tape& t, Tensor v);                       // leaf, no grad flow
int matmul(Tape& t, int a, int b);                     // [m,k] x [k,n]
int add(Tape& t, int a, int b);                        // same dims
int add_bias(Tape& t, int a, int bias);                // rows [m,n] + [n]
int scale_const(Tape& t, int a, double s);
int scale_by(Tape& t, int a, int scalar_param);        // scalar_param dims [1]
int transpose2d(Tape& t, int a);
int slice_cols(Tape& t, int a, int64_t c0, int64_t c1);
int concat_cols(Tape& t, const std::vector<int>& parts);
int layer_norm(Tape& t, int a, int gamma, int beta);   // per row, eps 1e-6
int gelu(Tape& t, int a);                              // exact erf form
int softmax_rows(Tape& t, int a);                      // asserts row sums ~ 1
int sigmoid(Tape& t, int a);
int reshape(Tape& t, int a, std::vector<int64_t> dims);

// channel-last volumetric ops; dims [D,H,W,C]
int avgpool3d(Tape& t, int a, int stride);
int upsample_nearest3d(Tape& t, int a, int factor);
int upsample_trilinear3d(Tape& t, int a);              // fixed 2x
int im2col3x3x3(Tape& t, int a);                       // -> [D*H*W, 27*C], zero pad

// scalars, dims [1]
int sum_all(Tape& t, int a);
int dot_const(Tape& t, int a, const Tensor& w);        // sum(a*w), w fixed
int s_add(Tape& t, int a, int b);
int s_sub(Tape& t, int a, int b);
int s_div(Tape& t, int a, int b);
int s_add_const(Tape& t, int a, double c);
int s_scale(Tape& t, int a, double c);

// mean BCE between logits and binary targets, numerically stable
int bce_with_logits_mean(Tape& t, int logits, const Tensor& target);

}  // namespace vf
