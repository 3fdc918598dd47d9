#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "signmap/losses.hpp"

using namespace signmap::losses;

TEST(CrossEntropy, Values) {
  EXPECT_EQ(cross_entropy(1.0), 0.0);
  EXPECT_NEAR(cross_entropy(std::exp(-1.0)), 1.0, 1e-15);
  EXPECT_NEAR(cross_entropy(0.5), 0.693147, 1e-6);
}

TEST(FocalLoss, Values) {
  for (double p = 0.01; p < 1.0; p += 0.01) EXPECT_DOUBLE_EQ(focal_loss(p, 0.0), cross_entropy(p));
  EXPECT_EQ(focal_loss(1.0, 2.0), 0.0);
  EXPECT_NEAR(focal_loss(0.5, 2.0), 0.173287, 1e-6);
}

TEST(FocalLossE, Values) {
  EXPECT_EQ(focal_loss_e(1.0), 0.0);
  EXPECT_NEAR(adaptive_gamma(0.5), 1.648721, 1e-6);
  EXPECT_NEAR(focal_loss_e(0.5), std::pow(0.5, std::exp(0.5)) * std::log(2.0), 1e-15);
  EXPECT_NEAR(focal_loss_e(0.5), 0.2210604, 1e-7);
}

TEST(FocalLossE, CrossoverAtOneMinusLnTwo) {
  const double p = 1.0 - std::log(2.0);
  EXPECT_NEAR(adaptive_gamma(p), 2.0, 1e-15);
  EXPECT_NEAR(focal_loss_e(p), focal_loss(p, 2.0), 1e-12);
}

TEST(FocalLossE, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const double p = 0.01 + 0.98 * i / 999.0;
    const double fd = (focal_loss_e(p + h) - focal_loss_e(p - h)) / (2 * h);
    const double an = d_focal_loss_e(p);
    EXPECT_LT(std::abs(an - fd), 1e-5 * std::max(1.0, std::abs(fd))) << "p=" << p;
    EXPECT_LT(an, 0.0) << "p=" << p;
  }
  const double fd = (focal_loss_e(0.5 + h) - focal_loss_e(0.5 - h)) / (2 * h);
  EXPECT_NEAR(d_focal_loss_e(0.5), fd, 1e-8);
}

TEST(Losses, DomainErrors) {
  EXPECT_THROW(cross_entropy(1.5), std::domain_error);
  EXPECT_THROW(cross_entropy(0.0), std::domain_error);
  EXPECT_THROW(focal_loss(0.5, -1.0), std::domain_error);
  EXPECT_THROW(focal_loss_e(NAN), std::domain_error);
  EXPECT_THROW(d_focal_loss_e(1.0), std::domain_error);
}

TEST(Losses, ClampProbability) {
  EXPECT_EQ(clamp_probability(0.0), kProbabilityFloor);
  EXPECT_EQ(clamp_probability(2.0), 1.0);
  EXPECT_EQ(clamp_probability(0.3), 0.3);
}
