#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pry/nn/tensor.hpp"

namespace pry::nn {

// Learnable tensor with a persistent gradient accumulator. `decay` marks
// whether decoupled weight decay applies (off for biases and norm affines).
template <class S>
struct Param {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool decay = true;
};

// Owns parameters in registration order (which is therefore the checkpoint
// order). Names are unique and double as checkpoint keys.
template <class S>
class ParamStore {
 public:
  Param<S>& add(const std::string& name, std::vector<int> shape,
                bool decay = true) {
    require(!index_.count(name), "param store: duplicate '" + name + "'");
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->value = Tensor<S>(shape);
    p->grad = Tensor<S>(std::move(shape));
    p->decay = decay;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Param<S>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  std::vector<Param<S>*> all() {
    std::vector<Param<S>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  size_t size() const { return params_.size(); }

  i64 scalar_count() const {
    i64 n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.fill(S(0));
  }

 private:
  std::vector<std::unique_ptr<Param<S>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

template <class S>
struct Var {
  int id = -1;
};

// Dynamic tape. A forward pass appends nodes; backward() runs the recorded
// closures in reverse and accumulates into bound Params' grads. Build one
// Graph per step; in inference mode nothing is recorded.
template <class S>
class Graph {
 public:
  explicit Graph(bool training = true) : training_(training) {}

  bool training() const { return training_; }

  Var<S> input(Tensor<S> value) {
    return push(std::move(value), false, nullptr);
  }

  // Binds a parameter as a leaf; repeated binds of the same Param return
  // the same node so shared weights accumulate once.
  Var<S> param(Param<S>& p) {
    auto it = bound_.find(&p);
    if (it != bound_.end()) return Var<S>{it->second};
    Var<S> v = push(p.value, training_, nullptr);
    bound_[&p] = v.id;
    return v;
  }

  // Appends an op node. `backward` receives the graph and the node id and
  // must += into parents' grads. It is dropped when no parent needs grads.
  Var<S> make(Tensor<S> value, const std::vector<Var<S>>& parents,
              std::function<void(Graph&, int)> backward) {
    bool needs = false;
    for (Var<S> p : parents) needs = needs || node(p.id).needs_grad;
    needs = needs && training_;
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  Tensor<S>& val(Var<S> v) { return node(v.id).value; }
  const Tensor<S>& val(Var<S> v) const { return node(v.id).value; }

  bool needs_grad(Var<S> v) const { return node(v.id).needs_grad; }

  // Valid during backward() for nodes that need grads.
  Tensor<S>& grad(Var<S> v) {
    Node& n = node(v.id);
    require(n.needs_grad, "graph: grad of a non-differentiable node");
    if (n.grad.data.empty()) {
      n.grad = Tensor<S>(n.value.shape);
    }
    return n.grad;
  }

  void backward(Var<S> loss) {
    require(training_, "graph: backward in inference mode");
    require(node(loss.id).value.numel() == 1, "graph: loss must be scalar");
    require(node(loss.id).needs_grad, "graph: loss does not depend on params");
    grad(loss).data[0] = S(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      if (n.needs_grad && n.backward && !n.grad.data.empty())
        n.backward(*this, i);
    }
    for (auto& [p, id] : bound_) {
      Node& n = node(id);
      if (!n.grad.data.empty()) p->grad.vec() += n.grad.vec();
    }
  }

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    bool needs_grad = false;
    std::function<void(Graph&, int)> backward;
  };

  Node& node(int id) {
    require(id >= 0 && id < int(nodes_.size()), "graph: bad node id");
    return nodes_[size_t(id)];
  }
  const Node& node(int id) const {
    require(id >= 0 && id < int(nodes_.size()), "graph: bad node id");
    return nodes_[size_t(id)];
  }

  Var<S> push(Tensor<S> value, bool needs,
              std::function<void(Graph&, int)> backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<S>{int(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<Param<S>*, int> bound_;
  bool training_;
};

}  // namespace pry::nn
