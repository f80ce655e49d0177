#include "qem/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace qem::ad {

int Tape::push(MatrixXd value,
               std::function<void(Tape&, const Node&)> backprop) {
    Node node;
    node.grad = MatrixXd::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return int(nodes_.size()) - 1;
}

int Tape::input(MatrixXd value) { return push(std::move(value)); }

int Tape::add(int a, int b) {
    return push(value(a) + value(b), [a, b](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad;
        t.nodes_[b].grad += self.grad;
    });
}

int Tape::sub(int a, int b) {
    return push(value(a) - value(b), [a, b](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad;
        t.nodes_[b].grad -= self.grad;
    });
}

int Tape::matmul(int a, int b) {
    return push(value(a) * value(b), [a, b](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad * t.nodes_[b].value.transpose();
        t.nodes_[b].grad += t.nodes_[a].value.transpose() * self.grad;
    });
}

int Tape::transpose(int a) {
    return push(value(a).transpose(), [a](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad.transpose();
    });
}

int Tape::cmul(int a, int b) {
    return push(value(a).cwiseProduct(value(b)),
                [a, b](Tape& t, const Node& self) {
                    t.nodes_[a].grad +=
                        self.grad.cwiseProduct(t.nodes_[b].value);
                    t.nodes_[b].grad +=
                        self.grad.cwiseProduct(t.nodes_[a].value);
                });
}

int Tape::mul_const(int a, const MatrixXd& c) {
    return push(value(a).cwiseProduct(c), [a, c](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad.cwiseProduct(c);
    });
}

int Tape::scale(int a, double s) {
    return push(value(a) * s, [a, s](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad * s;
    });
}

int Tape::add_const(int a, const MatrixXd& c) {
    return push(value(a) + c, [a](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad;
    });
}

int Tape::tanh_(int a) {
    MatrixXd out = value(a).array().tanh();
    return push(std::move(out), [a](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad.cwiseProduct(
            (1.0 - self.value.array().square()).matrix());
    });
}

int Tape::reciprocal(int a) {
    MatrixXd out = value(a).cwiseInverse();
    return push(std::move(out), [a](Tape& t, const Node& self) {
        t.nodes_[a].grad -= self.grad.cwiseProduct(
            self.value.array().square().matrix());
    });
}

int Tape::softmax_rows(int a) {
    const MatrixXd& x = value(a);
    MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        Eigen::ArrayXd row = x.row(r).array() - x.row(r).maxCoeff();
        Eigen::ArrayXd e = row.exp();
        out.row(r) = (e / e.sum()).matrix();
    }
    return push(std::move(out), [a](Tape& t, const Node& self) {
        // dL/dx_ij = s_ij (g_ij - sum_k g_ik s_ik) per row.
        for (Eigen::Index r = 0; r < self.value.rows(); ++r) {
            const double dot = self.grad.row(r).dot(self.value.row(r));
            t.nodes_[a].grad.row(r) +=
                self.value.row(r).cwiseProduct(
                    (self.grad.row(r).array() - dot).matrix());
        }
    });
}

int Tape::col(int a, Eigen::Index j) {
    return push(value(a).col(j), [a, j](Tape& t, const Node& self) {
        t.nodes_[a].grad.col(j) += self.grad;
    });
}

int Tape::element(int a, Eigen::Index i, Eigen::Index j) {
    MatrixXd out(1, 1);
    out(0, 0) = value(a)(i, j);
    return push(std::move(out), [a, i, j](Tape& t, const Node& self) {
        t.nodes_[a].grad(i, j) += self.grad(0, 0);
    });
}

int Tape::vstack(const std::vector<int>& rows) {
    if (rows.empty()) throw std::invalid_argument("vstack of nothing");
    const Eigen::Index cols = value(rows.front()).cols();
    MatrixXd out(Eigen::Index(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (value(rows[r]).rows() != 1 || value(rows[r]).cols() != cols) {
            throw std::invalid_argument("vstack expects uniform 1xL rows");
        }
        out.row(Eigen::Index(r)) = value(rows[r]);
    }
    return push(std::move(out), [rows](Tape& t, const Node& self) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            t.nodes_[rows[r]].grad += self.grad.row(Eigen::Index(r));
        }
    });
}

int Tape::add_scalar(int a, int s) {
    if (value(s).size() != 1) {
        throw std::invalid_argument("add_scalar needs a 1x1 node");
    }
    MatrixXd out = value(a).array() + value(s)(0, 0);
    return push(std::move(out), [a, s](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad;
        t.nodes_[s].grad(0, 0) += self.grad.sum();
    });
}

int Tape::sum(int a) {
    MatrixXd out(1, 1);
    out(0, 0) = value(a).sum();
    return push(std::move(out), [a](Tape& t, const Node& self) {
        t.nodes_[a].grad.array() += self.grad(0, 0);
    });
}

int Tape::clamp_magnitude(int a, double eps, bool* flagged) {
    const MatrixXd& x = value(a);
    MatrixXd out = x;
    MatrixXd mask = MatrixXd::Ones(x.rows(), x.cols());
    bool any = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::abs(x(i)) < eps) {
            out(i) = x(i) < 0.0 ? -eps : eps;
            mask(i) = 0.0;
            any = true;
        }
    }
    if (flagged != nullptr && any) *flagged = true;
    return push(std::move(out), [a, mask](Tape& t, const Node& self) {
        t.nodes_[a].grad += self.grad.cwiseProduct(mask);
    });
}

void Tape::backward(int loss) {
    if (value(loss).size() != 1) {
        throw std::invalid_argument("backward needs a scalar loss");
    }
    nodes_[loss].grad(0, 0) = 1.0;
    for (int i = loss; i >= 0; --i) {
        if (nodes_[i].backprop) nodes_[i].backprop(*this, nodes_[i]);
    }
}

}  // namespace qem::ad
