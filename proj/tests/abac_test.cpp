// Copyright 2026 The dbcabac Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbcabac/abac.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dbcabac/error.hpp"
#include "support/abac_oracle.hpp"

namespace dbcabac::abac {
namespace {

Document sample_policy_doc() {
  return Document::parse(R"({
    "sa": {"user_id": "user1", "role": "doctor", "domain_id": "domA"},
    "oa": {"device_id": "d1", "domain_id": "domA", "owner_ids": ["user1"], "data_type": "temperature"},
    "pa": {"read": 1, "write": 1},
    "ea": {"allowed_ip": "10.0.0.0/8", "start_time": 100, "end_time": 200}
  })");
}

Policy sample_policy() { return policy_from_document(sample_policy_doc()); }

AccessRequest matching_request() {
  return {{"user1", "doctor", "domA"}, {"d1", "domA"}, Operation::Read, "10.1.2.3", 150};
}

bool has_violation(const ValidationResult& r, std::string_view text) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

TEST(ValidatePolicy, CompletePolicyIsOk) {
  EXPECT_TRUE(validate_policy(sample_policy_doc()).ok());
}

TEST(ValidatePolicy, MissingEnvironmentGroup) {
  auto doc = sample_policy_doc();
  doc.erase("ea");
  auto r = validate_policy(doc);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_violation(r, "missing EA"));
}

TEST(ValidatePolicy, PermissionBitOutOfRange) {
  auto doc = sample_policy_doc();
  doc["pa"]["read"] = 2;
  EXPECT_TRUE(has_violation(validate_policy(doc), "PA bit out of range"));
}

TEST(ValidatePolicy, ReportsEveryViolation) {
  auto doc = sample_policy_doc();
  doc.erase("pa");
  doc["ea"]["start_time"] = 300;
  doc["oa"]["owner_ids"] = Document::array({"u", "u"});
  doc["sa"]["role"] = 7;
  auto r = validate_policy(doc);
  EXPECT_TRUE(has_violation(r, "missing PA"));
  EXPECT_TRUE(has_violation(r, "start_time is after"));
  EXPECT_TRUE(has_violation(r, "duplicates"));
  EXPECT_TRUE(has_violation(r, "SA.role must be a string"));
  EXPECT_EQ(r.violations.size(), 4u);
}

TEST(ValidatePolicy, RejectsBadAddressesAndTypes) {
  auto doc = sample_policy_doc();
  doc["ea"]["allowed_ip"] = "10.0.0.0/33";
  doc["pa"]["write"] = true;
  doc["oa"]["owner_ids"] = Document::array();
  auto r = validate_policy(doc);
  EXPECT_TRUE(has_violation(r, "allowed_ip"));
  EXPECT_TRUE(has_violation(r, "PA.write must be an integer"));
  EXPECT_TRUE(has_violation(r, "owner_ids must be non-empty"));
}

TEST(ValidatePolicy, NonObjectDocument) {
  EXPECT_FALSE(validate_policy(Document::array()).ok());
}

TEST(PolicyDocument, ParseThrowsInvalidPolicy) {
  auto doc = sample_policy_doc();
  doc.erase("sa");
  try {
    policy_from_document(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPolicy);
  }
}

TEST(PolicyDocument, OwnersSerializeSorted) {
  auto doc = sample_policy_doc();
  doc["oa"]["owner_ids"] = Document::array({"zed", "amy"});
  auto p = policy_from_document(doc);
  EXPECT_EQ(to_document(p)["oa"]["owner_ids"], Document::array({"amy", "zed"}));
  EXPECT_EQ(policy_from_document(to_document(p)), p);
  EXPECT_EQ(canonical(to_document(p)).find(' '), std::string::npos);
}

TEST(PermissionAttributes, DefaultPermitsBoth) {
  PermissionAttributes pa;
  EXPECT_TRUE(pa.allows(Operation::Read));
  EXPECT_TRUE(pa.allows(Operation::Write));
}

TEST(Attribute, RejectsEmptyName) {
  EXPECT_THROW(Attribute::make("", std::int64_t{3}), std::invalid_argument);
  EXPECT_EQ(std::get<bool>(Attribute::make("flag", true).value), true);
}

TEST(Ipv4, ParsesAddressesAndPrefixes) {
  EXPECT_EQ(parse_ipv4("10.0.0.1"), 0x0a000001u);
  EXPECT_FALSE(parse_ipv4("10.0.0"));
  EXPECT_FALSE(parse_ipv4("10.0.0.256"));
  EXPECT_FALSE(parse_ipv4("10.0.0.01"));
  EXPECT_FALSE(parse_ipv4("10.0.0.1 "));
  auto p = Ipv4Prefix::parse("192.168.1.77/24");
  ASSERT_TRUE(p);
  EXPECT_TRUE(p->contains(*parse_ipv4("192.168.1.5")));
  EXPECT_FALSE(p->contains(*parse_ipv4("192.168.2.5")));
  auto all = Ipv4Prefix::parse("0.0.0.0/0");
  ASSERT_TRUE(all);
  EXPECT_TRUE(all->contains(*parse_ipv4("8.8.8.8")));
  auto single = Ipv4Prefix::parse("1.2.3.4");
  ASSERT_TRUE(single);
  EXPECT_TRUE(single->contains(*parse_ipv4("1.2.3.4")));
  EXPECT_FALSE(single->contains(*parse_ipv4("1.2.3.5")));
  EXPECT_FALSE(Ipv4Prefix::parse("1.2.3.4/"));
}

TEST(MatchPolicy, ExactSubjectApproves) {
  auto d = match_policy(matching_request(), sample_policy(), "k");
  EXPECT_EQ(d.verdict, Verdict::Approve);
  EXPECT_EQ(d.reason, Reason::Match);
  EXPECT_EQ(d.matched_policy_key, "k");
}

TEST(MatchPolicy, RevokedReadBit) {
  auto p = sample_policy();
  p.pa.read = 0;
  auto d = match_policy(matching_request(), p);
  EXPECT_EQ(d.verdict, Verdict::Reject);
  EXPECT_EQ(d.reason, Reason::PermissionDenied);
}

TEST(MatchPolicy, JustPastWindowIsExpired) {
  auto r = matching_request();
  r.request_time = 201;
  EXPECT_EQ(match_policy(r, sample_policy()).reason, Reason::PolicyExpired);
  r.request_time = 200;
  EXPECT_TRUE(match_policy(r, sample_policy()).approved());
  r.request_time = 99;
  EXPECT_EQ(match_policy(r, sample_policy()).reason, Reason::OutsideTimeWindow);
}

TEST(MatchPolicy, OwnerMembershipGrantsRegardlessOfRole) {
  auto p = sample_policy();
  p.oa.add_owner("user2");
  AccessRequest r = matching_request();
  r.subject = {"user2", "nurse", "domB"};
  auto d = match_policy(r, p, "k");
  EXPECT_TRUE(d.approved());
  EXPECT_EQ(d.matched_policy_key, "k");
  // Cross-checked against the oracle.
  EXPECT_EQ(oracle::decide(r, p, "k"), d);
}

TEST(MatchPolicy, NonOwnerWithDifferentRoleRejected) {
  auto r = matching_request();
  r.subject.role = "nurse";
  auto p = sample_policy();
  p.oa.owner_ids = {"someone"};
  EXPECT_EQ(match_policy(r, p).reason, Reason::SubjectMismatch);
}

TEST(MatchPolicy, IpOutsidePrefix) {
  auto r = matching_request();
  r.client_ip = "192.168.1.5";
  EXPECT_EQ(match_policy(r, sample_policy()).reason, Reason::IpNotAllowed);
  r.client_ip = "not-an-ip";
  EXPECT_EQ(match_policy(r, sample_policy()).reason, Reason::IpNotAllowed);
}

TEST(MatchPolicy, ObjectMismatchIsNoPolicy) {
  auto r = matching_request();
  r.object_ref.device_id = "d9";
  EXPECT_EQ(match_policy(r, sample_policy()).reason, Reason::NoPolicy);
}

TEST(SelectDecision, EmptyCandidates) {
  auto d = select_decision(matching_request(), {});
  EXPECT_EQ(d.verdict, Verdict::Reject);
  EXPECT_EQ(d.reason, Reason::NoPolicy);
  EXPECT_FALSE(d.matched_policy_key);
}

TEST(SelectDecision, PermitOverrides) {
  auto denied = sample_policy();
  denied.pa.read = 0;
  std::vector<KeyedPolicy> c{{"a", denied}, {"b", sample_policy()}};
  auto d = select_decision(matching_request(), c);
  EXPECT_TRUE(d.approved());
  EXPECT_EQ(d.matched_policy_key, "b");
}

TEST(SelectDecision, SmallestApprovingKeyWins) {
  std::vector<KeyedPolicy> c{{"p2", sample_policy()}, {"p1", sample_policy()}};
  EXPECT_EQ(select_decision(matching_request(), c).matched_policy_key, "p1");
}

TEST(SelectDecision, FurthestProgressReasonWhenAllReject) {
  auto perm = sample_policy();
  perm.pa.read = 0;
  auto ip = sample_policy();
  ip.ea.allowed_ip = "172.16.0.0/12";
  auto subj = sample_policy();
  subj.sa.user_id = "other";
  subj.oa.owner_ids = {"other"};
  std::vector<KeyedPolicy> c{{"a", subj}, {"b", perm}, {"c", ip}};
  EXPECT_EQ(select_decision(matching_request(), c).reason, Reason::IpNotAllowed);
  std::vector<KeyedPolicy> c2{{"a", subj}, {"b", perm}};
  EXPECT_EQ(select_decision(matching_request(), c2).reason, Reason::PermissionDenied);
}

// --- properties over the exhaustive universe ---

class UniverseTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { universe_ = new oracle::Universe(oracle::small_universe()); }
  static void TearDownTestSuite() { delete universe_; }
  static oracle::Universe* universe_;
};
oracle::Universe* UniverseTest::universe_ = nullptr;

TEST_F(UniverseTest, AgreesWithOracleOnEveryPair) {
  std::size_t pairs = 0;
  for (const auto& p : universe_->policies) {
    for (const auto& r : universe_->requests) {
      ASSERT_EQ(match_policy(r, p, "k"), oracle::decide(r, p, "k"));
      ++pairs;
    }
  }
  EXPECT_GE(pairs, 1000u);
}

TEST_F(UniverseTest, MonotoneRevocationAndDelegation) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> pick_p(0, universe_->policies.size() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto& p = universe_->policies[pick_p(rng)];
    auto revoked_read = p;
    revoked_read.pa.read = 0;
    auto revoked_write = p;
    revoked_write.pa.write = 0;
    auto delegated = p;
    delegated.oa.add_owner("user" + std::to_string(1 + trial % 3));
    for (const auto& r : universe_->requests) {
      auto base = match_policy(r, p);
      if (!base.approved()) {
        EXPECT_FALSE(match_policy(r, revoked_read).approved());
        EXPECT_FALSE(match_policy(r, revoked_write).approved());
      }
      if (base.approved()) EXPECT_TRUE(match_policy(r, delegated).approved());
    }
  }
}

TEST_F(UniverseTest, ApproveImpliesWindowContainmentAndDeterminism) {
  for (std::size_t i = 0; i < universe_->policies.size(); i += 7) {
    const auto& p = universe_->policies[i];
    for (const auto& r : universe_->requests) {
      auto d = match_policy(r, p, "x");
      EXPECT_EQ(d, match_policy(r, p, "x"));
      if (d.approved()) {
        EXPECT_LE(p.ea.start_time, r.request_time);
        EXPECT_LE(r.request_time, p.ea.end_time);
        EXPECT_EQ(d.reason, Reason::Match);
        EXPECT_TRUE(d.matched_policy_key);
      }
    }
  }
}

TEST(Documents, RequestAndDecisionRoundTrip) {
  auto r = matching_request();
  EXPECT_EQ(request_from_document(to_document(r)), r);
  AccessDecision d{Verdict::Approve, Reason::Match, "policy/domA/d1/user1"};
  EXPECT_EQ(decision_from_document(to_document(d)), d);
  auto bad = to_document(r);
  bad.erase("operation");
  EXPECT_THROW(request_from_document(bad), Error);
}

}  // namespace
}  // namespace dbcabac::abac
