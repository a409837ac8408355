#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lmsfd/matrix.hpp"

namespace lmsfd {

class Tape;

// One differentiable computation node. `backward` reads this node's grad and
// accumulates into the parents' grads. A node without parents (or created via
// detach) contributes nothing upstream.
struct Node {
    Matrix value;
    Matrix grad;  // same shape as value, zero until backward reaches it
    bool requires_grad = false;
    std::vector<Node*> parents;
    std::function<void(Node&)> backward;
};

using Var = Node*;

// Per-step computation graph. Creation order is a topological order, so the
// backward pass is a single reverse sweep. Tapes are built for one forward
// pass (or one training step), run backward at most once, then dropped.
class Tape {
public:
    Var leaf(Matrix value, bool requires_grad);
    Var constant(Matrix value) { return leaf(std::move(value), false); }
    // Copies the current parameter values in; the caller keeps the returned
    // Var to read the gradient after backward().
    Var param(const Matrix& value) { return leaf(value, true); }
    Var make(Matrix value, std::vector<Node*> parents, std::function<void(Node&)> backward);

    // loss must be 1x1; seeds its grad with 1 and sweeps the tape in reverse.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<std::unique_ptr<Node>> nodes_;
};

// Binds external parameter matrices into a tape exactly once each, so shared
// parameters (e.g. a base weight used by two routes) accumulate their
// gradient in a single node.
class Binder {
public:
    explicit Binder(Tape& tape, bool trainable = true) : tape_(&tape), trainable_(trainable) {}

    Var bind(Matrix& m);

    struct Binding {
        Matrix* value;
        Var node;
    };
    const std::vector<Binding>& bindings() const { return bindings_; }

private:
    Tape* tape_;
    bool trainable_;
    std::vector<Binding> bindings_;
};

// ---- differentiable operations ----

// op(a) * op(b); trans_a && trans_b unsupported.
Var matmul(Tape& t, Var a, Var b, bool trans_a = false, bool trans_b = false);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
// a [m x n] + bias [1 x n] broadcast over rows
Var add_row_bias(Tape& t, Var a, Var bias);
Var scale(Tape& t, Var a, double s);
// wa * a + wb * b (same shapes)
Var add_scaled(Tape& t, Var a, Var b, double wa, double wb);
Var relu(Tape& t, Var a);
// Row-wise layer norm with stabilizer 1e-5 added to the variance.
// gain and bias are [1 x n].
Var layer_norm(Tape& t, Var a, Var gain, Var bias);
Var softmax_rows(Tape& t, Var a);
// Mean negative log-softmax probability of targets over rows whose target is
// not ignore_index. Throws DataError if every row is ignored.
Var cross_entropy(Tape& t, Var logits, std::span<const int> targets, int ignore_index);
// Mean over unmasked rows of KL(softmax(p_logits) || softmax(q_logits)).
// row_mask: 1 keeps a row, 0 drops it; empty keeps all. With detach_p the
// p side receives no gradient.
Var kl_rows(Tape& t, Var p_logits, Var q_logits, bool detach_p,
            std::span<const unsigned char> row_mask = {});
Var transpose(Tape& t, Var a);
Var slice_rows(Tape& t, Var a, std::size_t row0, std::size_t n_rows);
Var slice_cols(Tape& t, Var a, std::size_t col0, std::size_t n_cols);
Var concat_rows(Tape& t, std::span<const Var> parts);
Var concat_cols(Tape& t, std::span<const Var> parts);
// out.row(i) = table.row(ids[i]); backward scatter-adds into the table.
Var gather_rows(Tape& t, Var table, std::span<const int> ids);
// out[n_rows_out x cols] with out.row(dst[i]) = a.row(i), other rows zero.
// dst indices must be distinct.
Var scatter_rows(Tape& t, Var a, std::span<const int> dst, std::size_t n_rows_out);
// out[n x 1] with out[i] = a(i, cols[i]).
Var select_per_row(Tape& t, Var a, std::span<const int> cols);
// a [n x m] scaled row-wise by s [n x 1].
Var mul_col_broadcast(Tape& t, Var a, Var s);
Var sum_all(Tape& t, Var a);
// Value copy with no gradient path to a.
Var detach(Tape& t, Var a);

}  // namespace lmsfd
