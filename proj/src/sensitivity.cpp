#include "netobs/sensitivity.hpp"

#include <sstream>

#include "netobs/csvio.hpp"

namespace netobs {

namespace {

Matrix solve_dense(const Matrix& A, const Matrix& B, const char* what) {
    Eigen::PartialPivLU<Matrix> lu(A);
    Matrix X = lu.solve(B);
    if (!X.allFinite()) throw SingularMatrixError(what);
    return X;
}

}  // namespace

Matrix step_jacobian(const DiscreteModel& dm, const StepResult& step_result,
                     const StateVector& x_prev) {
    require(step_result.converged, "step_jacobian: step did not converge");
    const int n = dm.model.n;
    const double h = dm.h;

    switch (dm.scheme) {
        case Scheme::BE: {
            const Matrix A1 = Matrix::Identity(n, n) - h * dm.model.field_jacobian(step_result.x_next);
            return solve_dense(A1, Matrix::Identity(n, n),
                               "step_jacobian: singular BE sensitivity matrix");
        }
        case Scheme::TI: {
            const Matrix A = Matrix::Identity(n, n) -
                             0.5 * h * dm.model.field_jacobian(step_result.x_next);
            const Matrix B = Matrix::Identity(n, n) +
                             0.5 * h * dm.model.field_jacobian(x_prev);
            return solve_dense(A, B, "step_jacobian: singular TI sensitivity matrix");
        }
        case Scheme::IRK: {
            require(step_result.stage1.size() == n && step_result.stage2.size() == n,
                    "step_jacobian: missing IRK stages");
            const Matrix J1 = dm.model.field_jacobian(step_result.stage1);
            const Matrix J2 = dm.model.field_jacobian(step_result.stage2);
            Matrix A2(2 * n, 2 * n);
            A2.topLeftCorner(n, n) = (h / 4.0) * J1;
            A2.topRightCorner(n, n) = -(h / 4.0) * J2;
            A2.bottomLeftCorner(n, n) = (h / 4.0) * J1;  // 3h/12
            A2.bottomRightCorner(n, n) = (5.0 * h / 12.0) * J2;
            Matrix I_tilde(2 * n, n);
            I_tilde.topRows(n) = Matrix::Identity(n, n);
            I_tilde.bottomRows(n) = Matrix::Identity(n, n);
            const Matrix S =
                solve_dense(Matrix(Matrix::Identity(2 * n, 2 * n) - A2), I_tilde,
                            "step_jacobian: singular IRK stage sensitivity system");
            return Matrix(Matrix::Identity(n, n) + (h / 4.0) * J1 * S.topRows(n) +
                          (3.0 * h / 4.0) * J2 * S.bottomRows(n));
        }
    }
    return {};
}

JacobianStack stack_from_trajectory(const DiscreteModel& dm, const Trajectory& traj,
                                    const Matrix& C, bool signed_rows) {
    const int n = dm.model.n;
    const int N = traj.length();
    require(N >= 1, "stack: trajectory is empty");
    require(C.cols() == n, "stack: output matrix column count mismatch");
    if (dm.scheme == Scheme::IRK) {
        require(static_cast<int>(traj.stages.size()) == N - 1,
                "stack: IRK trajectory lacks stage history");
    }

    const int r = static_cast<int>(C.rows());
    const double sgn = signed_rows ? -1.0 : 1.0;

    JacobianStack stack;
    stack.N = N;
    stack.n = n;
    stack.output_matrix = C;
    stack.signed_rows = signed_rows;
    stack.full.resize(static_cast<long>(N) * r, n);
    stack.full.topRows(r) = sgn * C;
    stack.step_factors.reserve(N - 1);

    Matrix cumulative = Matrix::Identity(n, n);
    for (int k = 1; k < N; ++k) {
        StepResult view;
        view.converged = true;
        view.x_next = traj.states[k];
        if (dm.scheme == Scheme::IRK) {
            view.stage1 = traj.stages[k - 1].first;
            view.stage2 = traj.stages[k - 1].second;
        }
        Matrix factor = step_jacobian(dm, view, traj.states[k - 1]);
        cumulative = factor * cumulative;
        stack.step_factors.push_back(std::move(factor));
        stack.full.middleRows(static_cast<long>(k) * r, r) = sgn * (C * cumulative);
    }
    return stack;
}

JacobianStack stack_output_jacobian(const DiscreteModel& dm, const StateVector& x0, int N,
                                    const Matrix& C, bool signed_rows) {
    const Trajectory traj = simulate(dm, x0, N);
    return stack_from_trajectory(dm, traj, C, signed_rows);
}

Matrix finite_difference_stack(const DiscreteModel& dm, const StateVector& x0, int N,
                               const Matrix& C, bool signed_rows) {
    const int n = dm.model.n;
    const int r = static_cast<int>(C.rows());
    const double sgn = signed_rows ? -1.0 : 1.0;

    auto outputs = [&](const StateVector& start) {
        const Trajectory traj = simulate(dm, start, N);
        Eigen::VectorXd w(static_cast<long>(N) * r);
        for (int k = 0; k < N; ++k) {
            w.segment(static_cast<long>(k) * r, r) = C * traj.states[k];
        }
        return w;
    };

    Matrix J(static_cast<long>(N) * r, n);
    for (int i = 0; i < n; ++i) {
        const double delta = 1e-6 * (1.0 + std::abs(x0[i]));
        StateVector xp = x0;
        StateVector xm = x0;
        xp[i] += delta;
        xm[i] -= delta;
        // Divide by the realized perturbation, not 2*delta, so the rounding
        // of x0 +- delta does not leak into the quotient.
        J.col(i) = sgn * (outputs(xp) - outputs(xm)) / (xp[i] - xm[i]);
    }
    return J;
}

std::string jacobian_stack_csv(const JacobianStack& stack) {
    std::ostringstream os;
    for (long i = 0; i < stack.full.rows(); ++i) {
        for (long j = 0; j < stack.full.cols(); ++j) {
            if (j) os << ",";
            os << format_double(stack.full(i, j));
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace netobs
