// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sodium.h>

#include <thread>

#include "permhe/prng.hpp"
#include "permhe/transport/channel.hpp"
#include "permhe/transport/metrics.hpp"
#include "permhe/transport/transcript.hpp"

using namespace permhe;
using namespace permhe::transport;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Prng rng(seed, "bytes");
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng());
  return v;
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> b) {
  ensure_sodium();
  std::array<std::uint8_t, 32> h{};
  crypto_hash_sha256(h.data(), b.data(), b.size());
  return h;
}

}  // namespace

TEST(Frame, HeaderLayout) {
  Frame f{7, {1, 2, 3}};
  auto h = encode_frame_header(f);
  ASSERT_EQ(h.size(), kFrameHeaderBytes);
  EXPECT_EQ(h[0], 5);  // payload + 2
  EXPECT_EQ(h[1], 0);
  EXPECT_EQ(h[4], kFrameVersion);
  EXPECT_EQ(h[5], 7);
  EXPECT_EQ(f.wire_size(), 9u);
}

TEST(Loopback, EchoRoundtrip) {
  auto [a, b] = make_loopback_pair();
  std::thread echo([&, &b = b] {
    Frame f = recv_frame(*b);
    send_frame(*b, f);
  });
  Frame out{3, random_bytes(1000, 1)};
  send_frame(*a, out);
  Frame back = recv_frame(*a);
  echo.join();
  EXPECT_EQ(back.kind, 3);
  EXPECT_EQ(back.payload, out.payload);
  EXPECT_EQ(a->bytes_written(), out.wire_size());
  EXPECT_EQ(a->bytes_read(), out.wire_size());
  EXPECT_EQ(b->bytes_read(), out.wire_size());
}

TEST(Loopback, EmptyPayloadIsValid) {
  auto [a, b] = make_loopback_pair();
  send_frame(*a, Frame{9, {}});
  Frame f = recv_frame(*b);
  EXPECT_EQ(f.kind, 9);
  EXPECT_TRUE(f.payload.empty());
  EXPECT_EQ(b->bytes_read(), kFrameHeaderBytes);
}

TEST(Loopback, PeerCloseRaisesDisconnect) {
  auto [a, b] = make_loopback_pair();
  a->close();
  try {
    recv_frame(*b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::disconnected);
    EXPECT_EQ(e.category(), ErrorCategory::transport);
  }
  EXPECT_THROW(send_frame(*b, Frame{1, {}}), Error);
}

TEST(Loopback, BufferedBytesReadableAfterClose) {
  auto [a, b] = make_loopback_pair();
  send_frame(*a, Frame{2, {4, 5}});
  a->close();
  EXPECT_EQ(recv_frame(*b).payload, (std::vector<std::uint8_t>{4, 5}));
  EXPECT_THROW(recv_frame(*b), Error);
}

TEST(Frame, OversizeRejectedOnBothEnds) {
  auto [a, b] = make_loopback_pair();
  Frame big{1, std::vector<std::uint8_t>(101)};
  try {
    send_frame(*a, big, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::oversize);
  }
  EXPECT_EQ(a->bytes_written(), 0u);
  send_frame(*a, big);
  try {
    recv_frame(*b, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::oversize);
  }
}

TEST(Frame, VersionMismatchRejected) {
  auto [a, b] = make_loopback_pair();
  const std::uint8_t raw[] = {2, 0, 0, 0, 9, 1};
  a->write(raw);
  try {
    recv_frame(*b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::version);
  }
}

TEST(Frame, ShortLengthFieldRejected) {
  std::uint8_t raw[] = {1, 0, 0, 0, 1, 1};
  Frame f;
  EXPECT_THROW(parse_frame_header(raw, f), Error);
}

TEST(Tcp, DeliversTenMegabyteFrameIntact) {
  TcpListener listener(Endpoint{"127.0.0.1", 0});
  ASSERT_NE(listener.endpoint().port, 0);
  const auto payload = random_bytes(10u << 20, 42);
  const auto expected = sha256(payload);
  std::array<std::uint8_t, 32> got{};
  std::uint64_t server_read = 0;
  std::thread server([&] {
    auto ch = listener.accept(10000);
    ASSERT_TRUE(ch);
    Frame f = recv_frame(*ch);
    got = sha256(f.payload);
    server_read = ch->bytes_read();
    send_frame(*ch, Frame{2, {}});
  });
  auto client = tcp_connect(listener.endpoint());
  send_frame(*client, Frame{1, payload});
  Frame ack = recv_frame(*client);
  server.join();
  EXPECT_EQ(ack.kind, 2);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(server_read, payload.size() + kFrameHeaderBytes);
  EXPECT_EQ(client->bytes_written(), server_read);
}

TEST(Tcp, ConnectionRefusedIsTransportError) {
  std::uint16_t port;
  {
    TcpListener l(Endpoint{"127.0.0.1", 0});
    port = l.endpoint().port;
  }
  try {
    tcp_connect(Endpoint{"127.0.0.1", port});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::transport);
  }
}

TEST(Tcp, AcceptTimesOut) {
  TcpListener l(Endpoint{"127.0.0.1", 0});
  EXPECT_EQ(l.accept(10), nullptr);
}

TEST(Endpoint, Parse) {
  auto e = Endpoint::parse("10.0.0.1:8080");
  EXPECT_EQ(e.host, "10.0.0.1");
  EXPECT_EQ(e.port, 8080);
  EXPECT_EQ(Endpoint::parse(":99").host, "127.0.0.1");
  EXPECT_THROW(Endpoint::parse("nope"), Error);
  EXPECT_THROW(Endpoint::parse("h:70000"), Error);
  EXPECT_THROW(Endpoint::parse("h:x"), Error);
}

TEST(Meter, ReportRequiresFinishedSession) {
  Meter m;
  m.start(Phase::client_encode_encrypt);
  try {
    (void)m.report();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incomplete);
  }
}

TEST(Meter, TotalsAreColumnSums) {
  Meter m;
  m.start(Phase::client_encode_encrypt);
  m.record(Phase::client_encode_encrypt, Direction::upload, 1000);
  m.enter(Phase::server_set_model);
  m.record(Phase::server_set_model, Direction::download, 12);
  std::this_thread::sleep_for(std::chrono::milliseconds(2));
  m.enter(Phase::server_dnn_computation);
  m.record(Phase::server_dnn_computation, Direction::upload, 500);
  m.record(Phase::server_dnn_computation, Direction::download, 700);
  m.enter(Phase::client_decrypt_decode);
  m.record(Phase::client_decrypt_decode, Direction::download, 300);
  m.finish();
  auto r = m.report();
  double ms = 0;
  std::uint64_t bytes = 0;
  for (const auto& row : r.rows) {
    ms += row.latency_ms;
    bytes += row.comm_bytes();
  }
  EXPECT_DOUBLE_EQ(r.total_latency_ms(), ms);
  EXPECT_EQ(r.total_comm_bytes(), bytes);
  EXPECT_EQ(bytes, 2512u);
  EXPECT_EQ(r.total_upload_bytes(), 1500u);
  EXPECT_GE(r[Phase::server_set_model].latency_ms, 2.0);
}

TEST(Report, TableAndCsvLayout) {
  PhaseReport r;
  for (std::size_t i = 0; i < kPhaseCount; ++i) r.rows[i].phase = kPhases[i];
  r[Phase::client_encode_encrypt].upload_bytes = 3u << 20;
  r[Phase::client_encode_encrypt].latency_ms = 1.5;
  const std::string csv = r.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "phase,latency_ms,comm_mb");
  EXPECT_NE(csv.find("client_encode_encrypt,1.500000,3.000000000\n"), std::string::npos);
  EXPECT_NE(csv.find("total,1.500000,3.000000000\n"), std::string::npos);
  // Four phase rows plus the total and the header.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);

  const std::string t = r.table();
  for (auto name : {"Phase", "Latency (ms)", "Comm. (MB)", "Encode + Encry.", "Set Model", "DNN Computation",
                    "Decry.+ Decode", "Total"})
    EXPECT_NE(t.find(name), std::string::npos) << name;
}

TEST(Report, CsvMegabytesRecoverExactBytes) {
  PhaseReport r;
  for (std::size_t i = 0; i < kPhaseCount; ++i) r.rows[i].phase = kPhases[i];
  r[Phase::server_dnn_computation].download_bytes = 1234567;
  const std::string csv = r.csv();
  const auto at = csv.find("server_dnn_computation,");
  const auto comma = csv.find(',', at + 23);
  const double mb = std::stod(csv.substr(comma + 1));
  EXPECT_EQ(static_cast<std::uint64_t>(std::llround(mb * kBytesPerMb)), 1234567u);
}

TEST(Report, MeanIsArithmetic) {
  std::vector<PhaseReport> rs(3);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < kPhaseCount; ++i) rs[k].rows[i].phase = kPhases[i];
    rs[k][Phase::server_set_model].latency_ms = 1.0 + k;
    rs[k][Phase::server_set_model].upload_bytes = 90;
  }
  auto m = PhaseReport::mean(rs);
  EXPECT_DOUBLE_EQ(m[Phase::server_set_model].latency_ms, 2.0);
  EXPECT_EQ(m[Phase::server_set_model].upload_bytes, 90u);
  EXPECT_THROW(PhaseReport::mean({}), Error);
}

TEST(Transcript, RecordsFrameBytesAndDigests) {
  Transcript t(true);
  const std::uint8_t h[] = {1, 2, 3, 4, 5, 6};
  const std::uint8_t p[] = {9, 9};
  t.append(Direction::upload, 3, DataClass::ciphertext, h, p);
  t.append(Direction::download, 5, DataClass::public_data, h, {});
  ASSERT_EQ(t.entries().size(), 2u);
  EXPECT_EQ(t.entries()[0].bytes, 8u);
  EXPECT_EQ(t.entries()[0].payload.size(), 2u);
  EXPECT_EQ(t.bytes(Direction::upload), 8u);
  EXPECT_EQ(t.bytes(Direction::download), 6u);
  EXPECT_NE(t.entries()[0].digest, t.entries()[1].digest);

  Transcript u(false);
  u.append(Direction::upload, 3, DataClass::ciphertext, h, p);
  u.append(Direction::download, 5, DataClass::public_data, h, {});
  EXPECT_TRUE(t.same_content(u));
  EXPECT_TRUE(u.entries()[0].payload.empty());
}
