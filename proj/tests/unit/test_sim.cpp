#include "ssdtee/error.hpp"
#include "ssdtee/sim/kernel.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <vector>

using namespace ssdtee;
using sim::EventKind;
using sim::Kernel;
using sim::Resource;

TEST(Kernel, DispatchesAtFireTime) {
    Kernel k;
    SimTime seen = 0;
    k.schedule(50'000, EventKind::Generic, 0, [&] { seen = k.now(); });
    EXPECT_EQ(k.run_until_idle(), 50'000u);
    EXPECT_EQ(seen, 50'000u);
}

TEST(Kernel, TiesBreakBySequence) {
    Kernel k;
    std::vector<int> order;
    auto s1 = k.schedule(10, EventKind::Generic, 0, [&] { order.push_back(1); });
    auto s2 = k.schedule(10, EventKind::Generic, 0, [&] { order.push_back(2); });
    EXPECT_LT(s1, s2);
    k.run_until_idle();
    EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(Kernel, RejectsPast) {
    Kernel k;
    k.schedule(100, EventKind::Generic, 0, [&] { EXPECT_THROW(k.schedule(99, EventKind::Generic, 0, [] {}), SchedulingInPast); });
    k.run_until_idle();
}

TEST(Kernel, EmptyAndSingle) {
    Kernel k;
    EXPECT_EQ(k.run_until_idle(), 0u);
    k.schedule(42, EventKind::Generic, 0, [] {});
    EXPECT_EQ(k.run_until_idle(), 42u);
    EXPECT_EQ(k.run_until_idle(), 42u);
}

TEST(Kernel, EventCap) {
    Kernel k(1, 100);
    std::function<void()> loop = [&] { k.schedule_after(1, EventKind::Generic, 0, loop); };
    k.schedule(0, EventKind::Generic, 0, loop);
    EXPECT_THROW(k.run_until_idle(), EventLimitExceeded);
}

TEST(Kernel, MonotoneClockAndTrace) {
    auto run = [](std::uint64_t seed) {
        Kernel k(seed);
        std::ostringstream trace;
        k.set_trace(&trace);
        SimTime last = 0;
        bool monotone = true;
        for (int i = 0; i < 200; ++i) {
            const SimTime at = k.rng().below(10'000);
            k.schedule(at, static_cast<EventKind>(i % 5), static_cast<std::uint32_t>(i), [&] {
                monotone = monotone && k.now() >= last;
                last = k.now();
                if (k.rng().below(2) == 0) {
                    k.schedule_after(k.rng().below(500), EventKind::Generic, 7, [] {});
                }
            });
        }
        k.run_until_idle();
        EXPECT_TRUE(monotone);
        return std::make_pair(trace.str(), k.trace_digest());
    };
    auto a = run(9);
    auto b = run(9);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.second, run(10).second);
}

TEST(Resource, GrantRules) {
    Resource r("x");
    EXPECT_EQ(r.acquire(100, 10), 100u);
    EXPECT_EQ(r.busy_until(), 110u);

    Resource q("y");
    q.acquire(150, 50); // busy until 200
    EXPECT_EQ(q.acquire(150, 10), 200u);
    EXPECT_EQ(q.busy_until(), 210u);
}

TEST(Resource, FifoOnChannel) {
    Resource ch("channel");
    const SimTime t = 1'000;
    EXPECT_EQ(ch.acquire(t, 50'000), t);
    EXPECT_EQ(ch.acquire(t, 50'000), t + 50'000);
    EXPECT_EQ(ch.acquire(t, 50'000), t + 100'000);
    EXPECT_EQ(ch.utilization_ns(), 150'000u);
    EXPECT_EQ(ch.wait_ns(), 150'000u);
}

TEST(Resource, ExclusivityAndConservation) {
    Kernel k(3);
    std::vector<Resource> rs(4);
    std::vector<std::vector<std::pair<SimTime, SimTime>>> grants(4);
    for (int i = 0; i < 500; ++i) {
        k.schedule(k.rng().below(20'000), EventKind::Generic, 0, [&] {
            const auto which = k.rng().below(4);
            const Duration hold = 1 + k.rng().below(300);
            const SimTime g = rs[which].acquire(k.now(), hold);
            EXPECT_GE(g, k.now());
            grants[which].emplace_back(g, g + hold);
        });
    }
    const SimTime end = k.run_until_idle();
    Duration total = 0;
    SimTime horizon = end;
    for (std::size_t r = 0; r < rs.size(); ++r) {
        auto v = grants[r];
        std::sort(v.begin(), v.end());
        for (std::size_t i = 1; i < v.size(); ++i) {
            EXPECT_LE(v[i - 1].second, v[i].first);
        }
        total += rs[r].utilization_ns();
        horizon = std::max(horizon, rs[r].busy_until());
    }
    EXPECT_LE(total, rs.size() * horizon);
}

TEST(Rng, SameSeedSameDraws) {
    sim::Rng a(77), b(77);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.next_u64(), b.next_u64());
    }
    sim::Rng c(5);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_LT(c.below(13), 13u);
        const double u = c.unit();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}
