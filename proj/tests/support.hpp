#pragma once

#include "focusfic/model.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace testdata {

using focusfic::Dataset;
using focusfic::MatrixXd;
using focusfic::VectorXd;

inline Dataset birds()
{
    static const double rows[14][5] = {
        {36, 0.33, 1.26, 36, 14},  {30, 0.50, 1.17, 234, 13},  {37, 2.03, 1.06, 543, 83},
        {35, 0.99, 1.90, 551, 23}, {11, 0.03, 0.46, 773, 45},  {21, 2.17, 2.00, 801, 14},
        {11, 0.22, 0.70, 950, 14}, {13, 0.14, 0.74, 958, 5},   {17, 0.05, 0.61, 995, 29},
        {13, 0.07, 0.66, 1065, 55}, {29, 1.80, 1.50, 1167, 35}, {4, 0.17, 0.75, 1182, 75},
        {18, 0.61, 2.28, 1238, 75}, {15, 0.07, 0.55, 1380, 35}};
    VectorXd y(14);
    MatrixXd x(14, 4);
    for (int i = 0; i < 14; ++i) {
        y(i) = rows[i][0];
        for (int j = 0; j < 4; ++j) {
            x(i, j) = rows[i][j + 1];
        }
    }
    return Dataset(y, x, {"x1", "x2", "x3", "x4"});
}

inline focusfic::DesignTemplate bird_template()
{
    return focusfic::DesignTemplate::pairwise({"x1", "x2", "x3", "x4"}, true);
}

inline std::vector<std::string> covariate_names(int r)
{
    std::vector<std::string> names;
    for (int j = 1; j <= r; ++j) {
        names.push_back("x" + std::to_string(j));
    }
    return names;
}

/// Poisson counts with log-mean intercept + x * beta, covariates N(0, 1/4).
inline Dataset poisson_data(int n, const VectorXd& beta, double intercept, std::mt19937_64& rng)
{
    std::normal_distribution<double> z(0.0, 0.5);
    MatrixXd x(n, beta.size());
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < beta.size(); ++j) {
            x(i, j) = z(rng);
        }
        std::poisson_distribution<int> pois(std::exp(intercept + x.row(i).dot(beta)));
        y(i) = pois(rng);
    }
    return Dataset(y, x, covariate_names(static_cast<int>(beta.size())));
}

inline Dataset gaussian_data(int n, const VectorXd& beta, double intercept, double sigma, std::mt19937_64& rng)
{
    std::normal_distribution<double> z(0.0, 1.0);
    MatrixXd x(n, beta.size());
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < beta.size(); ++j) {
            x(i, j) = z(rng);
        }
        y(i) = intercept + x.row(i).dot(beta) + sigma * z(rng);
    }
    return Dataset(y, x, covariate_names(static_cast<int>(beta.size())));
}

inline Dataset binary_data(int n, const VectorXd& beta, double intercept, std::mt19937_64& rng)
{
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MatrixXd x(n, beta.size());
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < beta.size(); ++j) {
            x(i, j) = z(rng);
        }
        const double p = 1.0 / (1.0 + std::exp(-(intercept + x.row(i).dot(beta))));
        y(i) = u(rng) < p ? 1.0 : 0.0;
    }
    return Dataset(y, x, covariate_names(static_cast<int>(beta.size())));
}

inline double rel_diff(double a, double b)
{
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace testdata
