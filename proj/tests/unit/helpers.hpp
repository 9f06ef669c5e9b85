#pragma once

#include <doctest.h>

#include <string>

#include "oracles.hpp"
#include "retenta/error.hpp"

// Runs f and returns the retenta::Error it throws; fails the test otherwise.
template <class F>
retenta::Error expect_error(F&& f, retenta::ErrorCode code) {
    try {
        f();
    } catch (const retenta::Error& e) {
        CHECK_MESSAGE(e.code() == code, e.what());
        return e;
    }
    FAIL("no error thrown");
    return retenta::Error(code, "unreachable");
}

inline const char* kCustomerHeader =
    "customer_id,age,region,tenure_days,order_count,total_spend,days_since_last_order,"
    "purchase_interval_mean,nps\n";

inline std::string customer_line(const std::string& id, const std::string& region = "N",
                                 const std::string& nps = "7") {
    return id + ",40," + region + ",365,12,480.5,20,30," + nps + "\n";
}
