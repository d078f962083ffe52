#include <gtest/gtest.h>

#include <filesystem>

#include "equisparse/io.hpp"
#include "equisparse/parallel.hpp"
#include "equisparse/rng.hpp"

using namespace equisparse;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
    using A = std::array<std::uint32_t, 4>;
    EXPECT_EQ(CounterRng::philox({0, 0, 0, 0}, {0, 0}), (A{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(CounterRng::philox({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (A{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(CounterRng::philox({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (A{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    CounterRng a(1, 2), b(1, 2), c(1, 3);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_NE(x, c.next_u64());
    }
}

TEST(Rng, DistributionMoments) {
    CounterRng rng(4, 5);
    const int n = 200000;
    double s = 0, s2 = 0, pois = 0, u = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
        pois += rng.poisson(0.3);
        u += rng.uniform(2.0, 4.0);
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
    EXPECT_NEAR(pois / n, 0.3, 0.005);
    EXPECT_NEAR(u / n, 3.0, 0.01);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(Parallel, MapIsOrderedAndThreadInvariant) {
    auto f = [](int i) { return i * i; };
    EXPECT_EQ(parallel_map(50, 1, f), parallel_map(50, 4, f));
    EXPECT_EQ(parallel_map(3, 8, f), (std::vector<int>{0, 1, 4}));
}

TEST(Csv, QuotedFieldsAndLineEndings) {
    auto recs = parse_csv("a,\"b,c\",\"d\"\"e\"\r\n\n1,2,3", "t");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].fields, (std::vector<std::string>{"a", "b,c", "d\"e"}));
    EXPECT_EQ(recs[1].fields, (std::vector<std::string>{"1", "2", "3"}));
    EXPECT_EQ(recs[1].line, 3);
    EXPECT_EQ(code_of([] { parse_csv("\"open", "t"); }), ErrorCode::MalformedLine);
}

TEST(Csv, MatrixWithHeader) {
    auto m = parse_matrix_csv("x,y\n1,2.5\n-3,4e2\n", "m.csv", true);
    EXPECT_EQ(m.header, (std::vector<std::string>{"x", "y"}));
    Matrix want(2, 2);
    want << 1, 2.5, -3, 400;
    EXPECT_EQ(m.values, want);
}

TEST(Csv, RejectsNonFiniteAndRagged) {
    EXPECT_EQ(code_of([] { parse_matrix_csv("1,NaN\n", "m", false); }), ErrorCode::NonFiniteValue);
    EXPECT_EQ(code_of([] { parse_matrix_csv("1,inf\n", "m", false); }), ErrorCode::NonFiniteValue);
    EXPECT_EQ(code_of([] { parse_matrix_csv("1,abc\n", "m", false); }), ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] { parse_matrix_csv("1,2\n3\n", "m", false); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { parse_matrix_csv("", "m", false); }), ErrorCode::EmptyInput);
    EXPECT_EQ(code_of([] { parse_vector_csv("1,2\n", "v"); }), ErrorCode::DimensionMismatch);
    try {
        parse_matrix_csv("1,2\n3,x\n", "m.csv", false);
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("m.csv:2:2"), std::string::npos) << e.what();
    }
}

TEST(Csv, NumbersRoundTrip) {
    CounterRng rng(6, 1);
    Matrix m(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
    auto back = parse_matrix_csv(format_matrix_csv(m, {"a", "b,c", "d"}), "rt", true);
    EXPECT_EQ(back.values, m);
    EXPECT_EQ(back.header[1], "b,c");
    EXPECT_EQ(format_number(0.0), "0");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Files, MissingFileIsReported) {
    EXPECT_EQ(code_of([] { read_file("/nonexistent/file.csv"); }), ErrorCode::FileUnreadable);
    const auto path = std::filesystem::temp_directory_path() / "equisparse_io_test.txt";
    write_file(path.string(), "hello\n");
    EXPECT_EQ(read_file(path.string()), "hello\n");
    std::filesystem::remove(path);
}
