#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "graphtts/tape.hpp"

// Differentiable primitives. Rank-2 tensors are [rows x cols]; a rank-1
// tensor of length n is accepted wherever a single row is expected. The only
// broadcast is bias-add: add(matrix [m x n], row of length n).
namespace graphtts::ops {

Var matmul(Var a, Var b);
/// x [n x in] times W^T with W [out x in], plus optional bias [out].
Var linear(Var x, Var w);
Var linear(Var x, Var w, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Multiplies row r by factors[r]; factors are constants.
Var row_scale(Var a, std::vector<double> factors);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var transpose(Var a);
Var reshape(Var a, Shape shape);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
/// Softmax over `axis` of a rank-2 tensor (axis 1 normalises each row).
/// Rank-1 input is normalised as a whole.
Var softmax(Var a, std::size_t axis);

Var sum(Var a);
Var mean(Var a);
/// mean |pred - target|
Var l1_loss(Var pred, Var target);
/// Binary cross-entropy on logits, averaged: mean(softplus(x) - t*x).
Var bce_loss(Var logits, Var targets);

/// out[i] = table[indices[i]]
Var gather_rows(Var table, std::span<const std::size_t> indices);
/// out[targets[e]] += src[sources[e]] for every e; out has `rows` rows.
Var edge_scatter(Var src, std::span<const std::size_t> sources,
                 std::span<const std::size_t> targets, std::size_t rows);

}  // namespace graphtts::ops
