#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qem::ad {

using MatrixXd = Eigen::MatrixXd;

// Minimal tape-based reverse-mode differentiation over dense matrices.
// Operations append nodes and return integer node ids; backward() walks the
// tape in reverse creation order. Scalars are 1x1 matrices.
class Tape {
public:
    int input(MatrixXd value);          // leaf (parameter or constant)
    int add(int a, int b);
    int sub(int a, int b);
    int matmul(int a, int b);
    int transpose(int a);
    int cmul(int a, int b);             // elementwise product
    int mul_const(int a, const MatrixXd& c);
    int scale(int a, double s);
    int add_const(int a, const MatrixXd& c);
    int tanh_(int a);
    int reciprocal(int a);              // elementwise 1/x
    int softmax_rows(int a);            // row-wise softmax
    int col(int a, Eigen::Index j);     // column extraction
    int element(int a, Eigen::Index i, Eigen::Index j);  // 1x1 entry
    int vstack(const std::vector<int>& rows);            // stack 1xL rows
    int add_scalar(int a, int s);       // broadcast-add a 1x1 node
    int sum(int a);                     // 1x1 total
    // Clamps entries with |x| < eps to sign(x)*eps (sign(0) := +1); the
    // gradient passes through untouched entries only. Sets *flagged when any
    // entry was clamped.
    int clamp_magnitude(int a, double eps, bool* flagged = nullptr);

    const MatrixXd& value(int id) const { return nodes_[id].value; }
    const MatrixXd& grad(int id) const { return nodes_[id].grad; }

    // Seeds d(loss)/d(loss) = 1 (loss must be 1x1) and accumulates
    // gradients into every node.
    void backward(int loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        MatrixXd value;
        MatrixXd grad;
        std::function<void(Tape&, const Node&)> backprop;
    };

    int push(MatrixXd value,
             std::function<void(Tape&, const Node&)> backprop = nullptr);

    std::vector<Node> nodes_;
};

}  // namespace qem::ad
