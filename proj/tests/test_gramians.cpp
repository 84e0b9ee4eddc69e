#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "helpers.hpp"
#include "netobs/gramians.hpp"
#include "netobs/model_io.hpp"
#include "netobs/reaction.hpp"

using namespace netobs;
using namespace netobs::testing;

namespace {

ContinuousModel scalar_linear(double lambda) {
    Matrix A(1, 1);
    A << lambda;
    return make_linear_model(A);
}

GramianConfig fine_config(int n, double tau, double dt) {
    GramianConfig cfg;
    cfg.dt = dt;
    cfg.segments = static_cast<int>(std::lround(tau / dt));
    cfg.tau = cfg.segments * dt;
    cfg.x0 = StateVector::Constant(n, 1.0);
    cfg.T_set = {Matrix::Identity(n, n)};
    cfg.scales = {1.0};
    return cfg;
}

// Random Hurwitz matrix with spectral abscissa <= -margin.
Matrix random_stable(int n, double margin, std::uint64_t seed) {
    SplitRng rng(seed);
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.normal() / std::sqrt(n);
    Eigen::EigenSolver<Matrix> eig(A);
    double alpha = -1e300;
    for (int i = 0; i < n; ++i) alpha = std::max(alpha, eig.eigenvalues()[i].real());
    return A - (alpha + margin) * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("analytic gramian closed forms") {
    Matrix A(1, 1), C(1, 1);
    A << -1.0;
    C << 1.0;
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(analytic_linear_gramian(A, C, inf)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(matrix_rel_err(analytic_linear_gramian(-Matrix::Identity(2, 2),
                                                 Matrix::Identity(2, 2), inf),
                         0.5 * Matrix::Identity(2, 2)) < 1e-12);

    // Rotation over one period: integrand [cos, sin]^T [cos, sin] integrates
    // to pi I.
    Matrix R(2, 2);
    R << 0.0, 1.0, -1.0, 0.0;
    Matrix Crow(1, 2);
    Crow << 1.0, 0.0;
    const Matrix W = analytic_linear_gramian(R, Crow, 2.0 * M_PI);
    CHECK(matrix_rel_err(W, M_PI * Matrix::Identity(2, 2)) < 1e-10);

    CHECK_THROWS_AS(analytic_linear_gramian(R, Crow, inf), DomainError);
}

TEST_CASE("analytic gramian agrees with a dense trapezoid oracle") {
    const Matrix A = random_stable(3, 0.8, 3);
    SplitRng rng(4);
    Matrix C(2, 3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) C(i, j) = rng.normal();
    const double tau = 4.0;
    const Matrix W = analytic_linear_gramian(A, C, tau);

    // Independent route: trapezoid at dt = 1e-4 with eigendecomposition-free
    // stepping.
    const int Q = 40000;
    const double dt = tau / Q;
    Matrix E = Matrix::Identity(3, 3);
    const Matrix Estep = Matrix(dt * A).exp();
    const Matrix CtC = C.transpose() * C;
    Matrix W_oracle = Matrix::Zero(3, 3);
    for (int q = 0; q <= Q; ++q) {
        const double w = (q == 0 || q == Q) ? 0.5 : 1.0;
        W_oracle += w * dt * (E.transpose() * CtC * E);
        if (q < Q) E = Matrix(E * Estep);
    }
    CHECK(matrix_rel_err(W, W_oracle) < 1e-7);
}

TEST_CASE("definition 2 matches the analytic gramian for a scalar system") {
    const ContinuousModel model = scalar_linear(-1.0);
    const Matrix C = Matrix::Identity(1, 1);
    GramianConfig cfg = fine_config(1, 20.0, 1e-3);
    cfg.gamma = 0.5;
    const EmpiricalGramian g = gramian_def2(model, C, cfg);
    const Matrix W = analytic_linear_gramian(-Matrix::Identity(1, 1), C, cfg.tau);
    CHECK(matrix_rel_err(g.matrix, W) < 1e-5);
    CHECK(g.matrix(0, 0) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("gamma cancels exactly for linear dynamics") {
    const Matrix A = random_stable(3, 0.5, 11);
    const ContinuousModel model = make_linear_model(A);
    const Matrix C = Matrix::Identity(3, 3);
    GramianConfig cfg = fine_config(3, 5.0, 1e-2);
    cfg.gamma = 0.5;
    const Matrix g1 = gramian_def2(model, C, cfg).matrix;
    cfg.gamma = 1.0;
    const Matrix g2 = gramian_def2(model, C, cfg).matrix;
    CHECK(matrix_rel_err(g1, g2) < 1e-10);
}

TEST_CASE("gamma separates scales for nonlinear dynamics") {
    const ContinuousModel model = make_logistic_model();
    const Matrix C = Matrix::Identity(1, 1);
    GramianConfig cfg = fine_config(1, 5.0, 1e-2);
    cfg.x0 = StateVector::Constant(1, 0.5);
    cfg.gamma = 0.5;
    const Matrix big = gramian_def2(model, C, cfg).matrix;
    cfg.gamma = 0.05;
    const Matrix small = gramian_def2(model, C, cfg).matrix;
    CHECK((big - small).norm() > 1e-4);
}

TEST_CASE("definition 1 truncated at tau = 20 recovers the scalar integral") {
    const ContinuousModel model = scalar_linear(-1.0);
    const Matrix C = Matrix::Identity(1, 1);
    const GramianConfig cfg = fine_config(1, 20.0, 1e-3);
    const EmpiricalGramian g = gramian_def1(model, C, cfg);
    CHECK(g.matrix(0, 0) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("definition 1 with no outputs is the zero matrix") {
    const ContinuousModel model = scalar_linear(-1.0);
    const Matrix C = Matrix::Zero(1, 1);
    const GramianConfig cfg = fine_config(1, 2.0, 1e-2);
    CHECK(gramian_def1(model, C, cfg).matrix.norm() == 0.0);
}

TEST_CASE("definition 1 keeps decoupled modes decoupled") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = -3.0;
    const ContinuousModel model = make_linear_model(A);
    const GramianConfig cfg = fine_config(2, 15.0, 1e-3);
    const EmpiricalGramian g = gramian_def1(model, Matrix::Identity(2, 2), cfg);
    CHECK(std::abs(g.matrix(0, 1)) < 1e-8);
    CHECK(std::abs(g.matrix(1, 0)) < 1e-8);
}

TEST_CASE("definition 3 collapses to definition 2 for T = {I}, M = {gamma}") {
    const LoadedModel lm = load_model("models/hill5.toml");
    GramianConfig cfg = fine_config(5, 1.0, 0.05);
    cfg.x0 = StateVector::Constant(5, 0.5);
    cfg.gamma = 0.25;
    cfg.scales = {0.25};
    Matrix C = Matrix::Zero(2, 5);
    C(0, 0) = 1.0;
    C(1, 3) = 1.0;
    const Matrix d2 = gramian_def2(lm.model, C, cfg).matrix;
    const Matrix d3 = gramian_def3(lm.model, C, cfg).matrix;
    CHECK(matrix_rel_err(d2, d3) < 1e-12);
}

TEST_CASE("all three definitions match the analytic gramian for linear dynamics") {
    const int n = 4;
    const Matrix A = random_stable(n, 1.5, 21);
    const ContinuousModel model = make_linear_model(A);
    SplitRng rng(22);
    Matrix C = Matrix::Zero(2, n);
    C(0, 1) = 1.0;
    C(1, 3) = 1.0;

    GramianConfig cfg = fine_config(n, 10.0, 1e-3);
    cfg.gamma = 0.5;
    cfg.scales = {0.25, 0.5, 0.75, 1.0};
    cfg.T_set = random_orthogonal_set(n, 2, 77);

    const Matrix W = analytic_linear_gramian(A, C, cfg.tau);
    CHECK(matrix_rel_err(gramian_def1(model, C, cfg).matrix, W) < 1e-3);
    CHECK(matrix_rel_err(gramian_def2(model, C, cfg).matrix, W) < 1e-3);
    CHECK(matrix_rel_err(gramian_def3(model, C, cfg).matrix, W) < 1e-3);
}

TEST_CASE("definition 3 is invariant to the orthogonal set for linear dynamics") {
    const int n = 3;
    const Matrix A = random_stable(n, 1.0, 31);
    const ContinuousModel model = make_linear_model(A);
    const Matrix C = Matrix::Identity(n, n);
    GramianConfig cfg = fine_config(n, 8.0, 2e-3);
    cfg.scales = {0.5, 1.0};
    cfg.T_set = {Matrix::Identity(n, n)};
    const Matrix one = gramian_def3(model, C, cfg).matrix;
    cfg.T_set = random_orthogonal_set(n, 2, 5);
    const Matrix two = gramian_def3(model, C, cfg).matrix;
    CHECK(matrix_rel_err(one, two) < 1e-8);
}

TEST_CASE("computed gramians are symmetric positive semidefinite") {
    const LoadedModel lm = load_model("models/hill5.toml");
    GramianConfig cfg = fine_config(5, 1.0, 0.05);
    cfg.x0 = StateVector::Constant(5, 0.4);
    cfg.gamma = 0.3;
    cfg.scales = {0.25, 0.5};
    cfg.T_set = random_orthogonal_set(5, 2, 9);
    for (int definition : {1, 2, 3}) {
        EmpiricalGramian g;
        const Matrix C = Matrix::Identity(5, 5);
        if (definition == 1)
            g = gramian_def1(lm.model, C, cfg);
        else if (definition == 2)
            g = gramian_def2(lm.model, C, cfg);
        else
            g = gramian_def3(lm.model, C, cfg);
        CHECK((g.matrix - g.matrix.transpose()).norm() <= 1e-12 * (1.0 + g.matrix.norm()));
        Eigen::SelfAdjointEigenSolver<Matrix> eig(g.matrix);
        const double lmax = eig.eigenvalues().maxCoeff();
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * std::max(lmax, 1.0));
    }
}

TEST_CASE("random orthogonal sets") {
    const auto set = random_orthogonal_set(5, 3, 123);
    REQUIRE(set.size() == 3);
    for (const Matrix& T : set) {
        CHECK((T.transpose() * T - Matrix::Identity(5, 5)).norm() < 1e-12);
    }
    CHECK((set[0] - set[1]).norm() > 1e-3);
    const auto one = random_orthogonal_set(1, 2, 9);
    CHECK(one[0](0, 0) == 1.0);
    CHECK(one[1](0, 0) == 1.0);
    const auto again = random_orthogonal_set(5, 3, 123);
    CHECK((set[2] - again[2]).norm() == 0.0);
    CHECK((random_orthogonal_set(5, 1, 124)[0] - set[0]).norm() > 1e-3);
}

TEST_CASE("perturbations are clipped at physical bounds with a warning count") {
    ReactionMechanism mech;
    mech.species = {"A", "B"};
    Reaction r;
    r.alpha = {1, 0};
    r.beta = {0, 1};
    r.forward.value = 1.0;
    r.backward.value = 0.5;
    mech.reactions.push_back(r);
    const ContinuousModel model = mechanism_to_model(mech);
    GramianConfig cfg = fine_config(2, 0.5, 0.01);
    cfg.x0 = StateVector::Constant(2, 0.1);  // gamma = 0.5 crosses zero
    cfg.gamma = 0.5;
    const EmpiricalGramian g = gramian_def2(model, Matrix::Identity(2, 2), cfg);
    CHECK(g.clipped > 0);
}

TEST_CASE("gramian selection flags unobservable blocks and picks observable ones") {
    Matrix A = Matrix::Zero(4, 4);
    A.topLeftCorner(2, 2) << -1.0, 0.5, -0.5, -1.0;
    A.bottomRightCorner(2, 2) << -2.0, 0.3, -0.3, -2.0;
    const ContinuousModel model = make_linear_model(A);
    GramianConfig cfg = fine_config(4, 6.0, 0.01);
    cfg.gamma = 0.5;

    // Sensors only on the first block leave the second block unobserved.
    SensorMask blind;
    blind.bits = {1, 1, 0, 0};
    const auto objective = gramian_objective(model, cfg, 2);
    CHECK(objective(blind).degenerate);

    SensorMask spread;
    spread.bits = {1, 0, 1, 0};
    CHECK_FALSE(objective(spread).degenerate);

    SelectionConstraints c{4, 2, {}, {}};
    const SelectionResult best = gramian_select(model, cfg, c, 2, SearchSolver::Exhaustive);
    CHECK_FALSE(best.degenerate);
    // One sensor per block is required for full rank.
    CHECK(best.mask.bits[0] + best.mask.bits[1] == 1);
    CHECK(best.mask.bits[2] + best.mask.bits[3] == 1);
    CHECK(best.solver == "gramian-def2-exhaustive");
}

TEST_CASE("simulation counts per objective evaluation") {
    const LoadedModel lm = load_model("models/hill5.toml");
    const int n = 5;
    GramianConfig cfg = fine_config(n, 0.5, 0.05);
    cfg.x0 = StateVector::Constant(n, 0.5);
    cfg.gamma = 0.25;
    cfg.scales = {0.25, 0.5, 0.75, 1.0};
    cfg.T_set = random_orthogonal_set(n, 2, 3);
    SensorMask mask;
    mask.bits = {1, 0, 1, 0, 1};

    std::uint64_t before = simulation_count();
    gramian_objective(lm.model, cfg, 2)(mask);
    CHECK(simulation_count() - before == 2 * n);

    before = simulation_count();
    gramian_objective(lm.model, cfg, 3)(mask);
    CHECK(simulation_count() - before == 2 * n * 2 * 4);

    before = simulation_count();
    gramian_objective(lm.model, cfg, 1)(mask);
    CHECK(simulation_count() - before == static_cast<std::uint64_t>(n) * 2 * 4);

    const DiscreteModel dm{lm.model, Scheme::IRK, 0.05};
    before = simulation_count();
    jacobian_objective(dm, cfg.x0, 10)(mask);
    CHECK(simulation_count() - before == 1);
}

TEST_CASE("gramian csv and eigenvalue report") {
    EmpiricalGramian g;
    g.matrix = Matrix::Identity(2, 2);
    g.definition = 2;
    CHECK(gramian_csv(g) == "1,0\n0,1\n");
    CHECK(gramian_eigenvalue_report(g).find("index,eigenvalue") == 0);
}
