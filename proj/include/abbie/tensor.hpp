#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abbie/errors.hpp"

namespace abbie {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Post-op NaN/Inf scan switch. Defaults on in debug builds, off in release;
// tests and the trainer flip it explicitly.
bool finite_checks_enabled();
void set_finite_checks(bool on);

// Worker lane count for intra-op parallelism. Every output element is computed
// wholly inside one lane with the same sequential reduction order, so results
// are bitwise identical for any lane count. Reads ABBIE_THREADS at first use.
int thread_lanes();

template <class S>
class DiffTape;

// Dense row-major n-d array. Copies share storage; every op allocates a fresh
// output, and in-place mutation is reserved for owners of leaf tensors (the
// optimizer). An attached tape handle makes ops record themselves.
template <class S>
class TensorT {
public:
    TensorT() = default;
    explicit TensorT(Shape shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<S>>(static_cast<size_t>(numel(shape_)), S(0))) {}
    TensorT(Shape shape, std::vector<S> values);

    static TensorT scalar(S v) { return TensorT({}, {v}); }
    static TensorT full(Shape shape, S v);

    const Shape& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t size() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }
    bool defined() const { return data_ != nullptr; }

    S* data() { return data_->data(); }
    const S* data() const { return data_->data(); }
    std::vector<S>& values() { return *data_; }
    const std::vector<S>& values() const { return *data_; }
    const std::shared_ptr<std::vector<S>>& storage() const { return data_; }

    S item() const {
        if (size() != 1) throw UsageError("item() on tensor of size " + std::to_string(size()));
        return (*data_)[0];
    }

    // The tape handle is a weak token: once the tape dies, tape() reads null
    // and the tensor quietly degrades to a plain value.
    DiffTape<S>* tape() const {
        auto p = token_.lock();
        return p ? *p : nullptr;
    }
    int64_t node() const { return node_; }
    void set_node(const std::shared_ptr<DiffTape<S>*>& token, int64_t node) {
        token_ = token;
        node_ = node;
    }
    void detach() {
        token_.reset();
        node_ = -1;
    }

    // Same storage under a new shape (row-major contiguous, zero copy).
    // The view carries no tape handle; reshape() records the link.
    TensorT with_shape(Shape new_shape) const {
        if (numel(new_shape) != size())
            throw ShapeError("cannot view " + shape_str(shape_) + " as " + shape_str(new_shape));
        TensorT t = *this;
        t.shape_ = std::move(new_shape);
        t.detach();
        return t;
    }

private:
    Shape shape_;
    std::shared_ptr<std::vector<S>> data_;
    std::weak_ptr<DiffTape<S>*> token_;
    int64_t node_ = -1;
};

using Tensor = TensorT<float>;

// Integer id array (token batches, positions).
struct Ids {
    Shape shape;
    std::vector<int32_t> v;

    Ids() = default;
    Ids(Shape s, std::vector<int32_t> vals) : shape(std::move(s)), v(std::move(vals)) {}
    int64_t size() const { return static_cast<int64_t>(v.size()); }
};

// Record of primitive applications for reverse-mode differentiation.
// Creation order is a topological order; backward() replays it strictly in
// reverse, accumulating gradients additively across fan-out.
template <class S>
class DiffTape {
public:
    using BackFn = std::function<void(DiffTape&, const std::vector<S>& grad_out)>;

    DiffTape() = default;
    DiffTape(const DiffTape&) = delete;
    DiffTape& operator=(const DiffTape&) = delete;

    // Registers a leaf. The tensor keeps its storage and gains a node handle.
    void watch(TensorT<S>& t) {
        t.set_node(token_, add_node(t.shape(), "leaf"));
    }

    // Called by ops: attaches a freshly computed output to the tape.
    TensorT<S> record(const char* op, TensorT<S> out, BackFn back) {
        int64_t id = add_node(out.shape(), op);
        nodes_[static_cast<size_t>(id)].back = std::move(back);
        out.set_node(token_, id);
        return out;
    }

    // Seeds d(loss)/d(loss) = 1 and replays the tape backward. `loss` must be
    // a scalar recorded on this tape.
    void backward(const TensorT<S>& loss);

    // Gradient of the given tensor; zeros if the backward pass never reached it.
    TensorT<S> grad(const TensorT<S>& t) const;

    // Accumulation buffer for a node, sized on first touch.
    std::vector<S>& grad_buffer(int64_t node) {
        auto& n = nodes_[static_cast<size_t>(node)];
        if (n.grad.empty()) n.grad.assign(static_cast<size_t>(numel(n.shape)), S(0));
        return n.grad;
    }

    int64_t num_nodes() const { return static_cast<int64_t>(nodes_.size()); }

private:
    struct Node {
        Shape shape;
        const char* op;
        std::vector<S> grad;
        BackFn back;
    };

    int64_t add_node(const Shape& shape, const char* op) {
        nodes_.push_back(Node{shape, op, {}, nullptr});
        return static_cast<int64_t>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    std::shared_ptr<DiffTape*> token_ = std::make_shared<DiffTape*>(this);
};

// ---------------------------------------------------------------------------
// Primitive ops. Each works tape-free on raw values; if an input carries a
// tape handle the application is recorded. Reductions run in a fixed
// left-to-right order, so identical inputs give bitwise identical outputs.
// ---------------------------------------------------------------------------

// Contraction over the last dim of a and second-to-last of b, with numpy-style
// broadcasting over leading batch dims: a[..,m,k] x b[..,k,n] -> [..,m,n].
template <class S> TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b);

template <class S> TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> hadamard(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> scale(const TensorT<S>& a, S factor);

template <class S> TensorT<S> reshape(const TensorT<S>& a, Shape new_shape);
template <class S> TensorT<S> transpose_last2(const TensorT<S>& a);
template <class S> TensorT<S> concat_lastdim(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> slice_lastdim(const TensorT<S>& a, int64_t start, int64_t len);

// Head bookkeeping for attention: [b,t,h*hd] <-> [b,h,t,hd], and KV head
// duplication [b,kv,t,hd] -> [b,kv*group,t,hd] where output head q reads
// input head floor(q/group).
template <class S> TensorT<S> split_heads(const TensorT<S>& a, int64_t n_heads);
template <class S> TensorT<S> merge_heads(const TensorT<S>& a);
template <class S> TensorT<S> repeat_heads(const TensorT<S>& a, int64_t group);

template <class S> TensorT<S> silu(const TensorT<S>& a);

// Rows sum to 1; max-subtraction applied per row.
template <class S> TensorT<S> softmax_lastdim(const TensorT<S>& a);

// For square trailing dims [..,t,t]: row i is a softmax over columns j <= i,
// zero above the diagonal. Masked entries never enter the normalization.
template <class S> TensorT<S> causal_softmax(const TensorT<S>& a);

// out = a / sqrt(mean(a^2, lastdim) + eps) * gain
template <class S> TensorT<S> rms_norm(const TensorT<S>& a, const TensorT<S>& gain, S eps);

// Row gather: table[vocab,d], ids[b,t] -> [b,t,d]. Backward scatter-adds.
template <class S> TensorT<S> embedding_gather(const TensorT<S>& table, const Ids& ids);

// Mean negative log-softmax probability of targets over non-ignored positions.
template <class S>
TensorT<S> cross_entropy_logits(const TensorT<S>& logits, const Ids& targets,
                                std::optional<int32_t> ignore_index = std::nullopt);

template <class S> TensorT<S> sum_all(const TensorT<S>& a);

// Throws NumericsError if any element is NaN/Inf (used by the post-op scan).
template <class S> void check_finite(const TensorT<S>& t, const char* op);

// Raw gemm, exposed for the inference path: c[m,n] += a[m,k] * b[k,n],
// k accumulated left to right. Row-parallel; bitwise lane-count invariant.
template <class S>
void gemm_acc(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n);

}  // namespace abbie
