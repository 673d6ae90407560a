#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "banditrl/errors.hpp"
#include "banditrl/rng.hpp"
#include "banditrl/text.hpp"

using namespace banditrl;

TEST(Text, FormatDoubleRoundTrips)
{
    Rng r(11);
    for (int i = 0; i < 10000; ++i) {
        const double x = (r.uniform() - 0.5) * std::pow(10.0, r.uniform(-20, 20));
        ASSERT_EQ(parse_double(format_double(x)), x);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(200.0), "200");
}

TEST(Text, FormatNonFinite)
{
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Text, ParseErrors)
{
    EXPECT_THROW(parse_double("abc"), ConfigError);
    EXPECT_THROW(parse_double("1.5x"), ConfigError);
    EXPECT_THROW(parse_int("2.5"), ConfigError);
    EXPECT_EQ(parse_int(" 42 "), 42);
}

TEST(Text, SplitAndTrim)
{
    const auto parts = split(" a, b ,c ", ',');
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0], "a");
    EXPECT_EQ(parts[1], "b");
    EXPECT_EQ(parts[2], "c");
    EXPECT_EQ(trim("\t x \n"), "x");
}
