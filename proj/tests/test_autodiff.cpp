#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "qem/autodiff.hpp"

using qem::ad::Tape;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                       std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

// Central finite-difference check of d(scalar)/d(inputs) for a tape-built
// function of several matrix inputs.
void check_gradients(
    const std::vector<MatrixXd>& inputs,
    const std::function<int(Tape&, const std::vector<int>&)>& build,
    double step = 1e-6, double tol = 1e-6) {
    Tape tape;
    std::vector<int> ids;
    for (const MatrixXd& m : inputs) ids.push_back(tape.input(m));
    const int loss = build(tape, ids);
    REQUIRE(tape.value(loss).size() == 1);
    tape.backward(loss);

    for (std::size_t v = 0; v < inputs.size(); ++v) {
        for (Eigen::Index i = 0; i < inputs[v].rows(); ++i) {
            for (Eigen::Index j = 0; j < inputs[v].cols(); ++j) {
                auto eval = [&](double delta) {
                    std::vector<MatrixXd> shifted = inputs;
                    shifted[v](i, j) += delta;
                    Tape t;
                    std::vector<int> sids;
                    for (const MatrixXd& m : shifted)
                        sids.push_back(t.input(m));
                    return t.value(build(t, sids))(0, 0);
                };
                const double fd = (eval(step) - eval(-step)) / (2.0 * step);
                const double an = tape.grad(ids[v])(i, j);
                const double scale = std::max({1.0, std::abs(fd), std::abs(an)});
                CHECK(std::abs(fd - an) / scale < tol);
            }
        }
    }
}

}  // namespace

TEST_CASE("forward values of the primitive ops") {
    Tape tape;
    MatrixXd a(2, 2), b(2, 2);
    a << 1.0, 2.0, 3.0, 4.0;
    b << 0.5, -1.0, 2.0, 0.25;
    const int ia = tape.input(a), ib = tape.input(b);
    CHECK((tape.value(tape.add(ia, ib)) - (a + b)).norm() == 0.0);
    CHECK((tape.value(tape.sub(ia, ib)) - (a - b)).norm() == 0.0);
    CHECK((tape.value(tape.matmul(ia, ib)) - (a * b)).norm() == 0.0);
    CHECK((tape.value(tape.transpose(ia)) - a.transpose()).norm() == 0.0);
    CHECK((tape.value(tape.cmul(ia, ib)) - a.cwiseProduct(b)).norm() == 0.0);
    CHECK((tape.value(tape.scale(ia, 2.5)) - 2.5 * a).norm() == 0.0);
    CHECK((tape.value(tape.tanh_(ia)) -
           a.unaryExpr([](double x) { return std::tanh(x); }))
              .norm() == 0.0);
    CHECK((tape.value(tape.reciprocal(ib)) - b.cwiseInverse()).norm() == 0.0);
    CHECK(tape.value(tape.sum(ia))(0, 0) == a.sum());
    CHECK(tape.value(tape.element(ia, 1, 0))(0, 0) == 3.0);
    CHECK(tape.value(tape.col(ia, 1)).col(0) == a.col(1));
}

TEST_CASE("softmax rows sum to one and are shift-invariant") {
    std::mt19937_64 rng(3);
    Tape tape;
    const MatrixXd a = random_matrix(4, 4, rng);
    const MatrixXd s = tape.value(tape.softmax_rows(tape.input(a)));
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(s.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));

    Tape tape2;
    const MatrixXd shifted = (a.array() + 7.3).matrix();
    const MatrixXd s2 = tape2.value(tape2.softmax_rows(tape2.input(shifted)));
    CHECK((s - s2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention-style product is a convex row combination") {
    // A = softmax(U N^T / sqrt(d)) U: each entry of A lies within the range
    // of the corresponding U column values.
    std::mt19937_64 rng(5);
    const MatrixXd u = random_matrix(6, 1, rng);
    const MatrixXd n = random_matrix(6, 1, rng);
    Tape tape;
    const int iu = tape.input(u), in = tape.input(n);
    const int s = tape.softmax_rows(
        tape.scale(tape.matmul(iu, tape.transpose(in)), 1.0 / std::sqrt(6.0)));
    const MatrixXd a = tape.value(tape.matmul(s, iu));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        CHECK(a(i, 0) >= u.minCoeff() - 1e-12);
        CHECK(a(i, 0) <= u.maxCoeff() + 1e-12);
    }
}

TEST_CASE("gradients of arithmetic compositions match finite differences") {
    std::mt19937_64 rng(7);
    const std::vector<MatrixXd> inputs = {random_matrix(3, 2, rng),
                                          random_matrix(2, 3, rng),
                                          random_matrix(3, 3, rng)};
    check_gradients(inputs, [](Tape& t, const std::vector<int>& ids) {
        const int prod = t.matmul(ids[0], ids[1]);       // 3x3
        const int mixed = t.cmul(prod, ids[2]);          // 3x3
        const int shifted = t.add(mixed, t.transpose(ids[2]));
        return t.sum(t.tanh_(t.scale(shifted, 0.7)));
    });
}

TEST_CASE("gradients through softmax, reciprocal and broadcast ops") {
    std::mt19937_64 rng(11);
    const std::vector<MatrixXd> inputs = {random_matrix(4, 1, rng),
                                          random_matrix(4, 1, rng),
                                          MatrixXd::Constant(1, 1, 0.3)};
    check_gradients(inputs, [](Tape& t, const std::vector<int>& ids) {
        const int outer = t.matmul(ids[0], t.transpose(ids[1]));  // 4x4
        const int att = t.matmul(t.softmax_rows(outer), ids[0]);  // 4x1
        const int scaled = t.add_scalar(att, ids[2]);
        const int denom = t.add_const(
            t.cmul(scaled, scaled), MatrixXd::Constant(4, 1, 0.5));
        return t.sum(t.reciprocal(denom));
    });
}

TEST_CASE("gradients through column/element/vstack plumbing") {
    std::mt19937_64 rng(13);
    const std::vector<MatrixXd> inputs = {random_matrix(2, 4, rng),
                                          random_matrix(2, 4, rng)};
    check_gradients(inputs, [](Tape& t, const std::vector<int>& ids) {
        std::vector<int> rows;
        for (Eigen::Index j = 0; j < 4; ++j) {
            const int c0 = t.element(ids[0], 0, j);
            const int c1 = t.element(ids[1], 1, j);
            rows.push_back(t.transpose(
                t.add(t.col(ids[0], j), t.scale(t.col(ids[1], j), 0.4))));
            rows.back() = t.add_scalar(rows.back(), t.cmul(c0, c1));
        }
        return t.sum(t.vstack(rows));
    });
}

TEST_CASE("clamp_magnitude clamps, flags and masks the gradient") {
    MatrixXd a(1, 3);
    a << 1e-9, -1e-9, 0.5;
    Tape tape;
    bool flagged = false;
    const int ia = tape.input(a);
    const int clamped = tape.clamp_magnitude(ia, 1e-6, &flagged);
    CHECK(flagged);
    CHECK(tape.value(clamped)(0, 0) == 1e-6);
    CHECK(tape.value(clamped)(0, 1) == -1e-6);
    CHECK(tape.value(clamped)(0, 2) == 0.5);

    tape.backward(tape.sum(clamped));
    CHECK(tape.grad(ia)(0, 0) == 0.0);  // clamped entries pass no gradient
    CHECK(tape.grad(ia)(0, 1) == 0.0);
    CHECK(tape.grad(ia)(0, 2) == 1.0);

    Tape clean;
    bool flag2 = false;
    const int big = clean.input(MatrixXd::Constant(2, 2, 0.9));
    clean.clamp_magnitude(big, 1e-6, &flag2);
    CHECK_FALSE(flag2);
}

TEST_CASE("gradient accumulates over reused nodes") {
    // loss = sum(a * a) + sum(a): d/da = 2a + 1.
    MatrixXd a(2, 2);
    a << 0.3, -0.7, 1.2, 0.1;
    Tape tape;
    const int ia = tape.input(a);
    const int loss = tape.add(tape.sum(tape.cmul(ia, ia)), tape.sum(ia));
    tape.backward(loss);
    CHECK((tape.grad(ia) - (2.0 * a + MatrixXd::Ones(2, 2))).norm() < 1e-12);
}
