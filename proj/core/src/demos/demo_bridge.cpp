#include "sacfd/demos/demo_bridge.hpp"

#include "sacfd/demos/recorder.hpp"
#include "sacfd/error.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace sacfd::demos {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

// ---------------------------------------------------------------------------------------
// BridgeSession

BridgeSession::BridgeSession(env::EnvConfig config, std::filesystem::path out_dir)
	: env_(std::move(config))
	, out_dir_(std::move(out_dir))
{
}

std::string BridgeSession::begin_episode()
{
	observation_ = env_.reset();
	episode_seed_ = env_.episode_seed();
	transitions_.clear();
	episodic_reward_ = 0.0;
	cause_ = env::TerminalCause::none;
	phase_ = Phase::running;
	started_ = true;
	return encode(make_scene(env_.roundabout(), env_.world(), episode_seed_, seq_++));
}

std::string BridgeSession::tick(double action)
{
	if (!started_ || phase_ != Phase::running)
	{
		throw ContractError("bridge tick outside a running episode");
	}
	const auto result = env_.step(action);
	replay::Transition tr;
	tr.state = observation_;
	tr.action = result.applied_action;
	tr.reward = result.reward;
	tr.next_state = result.observation;
	tr.done = result.terminal && result.cause != env::TerminalCause::timeout;
	tr.source = replay::Source::expert;
	transitions_.push_back(tr);
	episodic_reward_ += result.reward;
	observation_ = result.observation;
	if (result.terminal)
	{
		cause_ = result.cause;
		phase_ = Phase::awaiting_decision;
	}
	return encode(make_state(seq_++, env_.roundabout(), env_.world(), &result, episodic_reward_));
}

std::vector<std::string> BridgeSession::finish(bool save, std::string_view cause_override)
{
	EpisodeEndMessage end;
	end.episodic_reward = episodic_reward_;
	end.steps = transitions_.size();
	end.cause = cause_override.empty() ? std::string(env::to_string(cause_)) : std::string(cause_override);
	std::vector<std::string> out;
	if (save)
	{
		auto file = make_trajectory(env_.config(), episode_seed_, DemoSource::human, transitions_, cause_);
		std::filesystem::create_directories(out_dir_);
		const auto path = out_dir_ / fmt::format("human-{:04d}-{}.jsonl", saved_.size(), episode_seed_);
		try
		{
			write_trajectory(path, file);
			saved_.push_back(path);
			end.saved_path = path.string();
			spdlog::info("saved episode to {} (reward {:.2f}, {} steps)", path.string(), end.episodic_reward, end.steps);
		}
		catch (const std::exception& e)
		{
			std::error_code ec;
			std::filesystem::remove(path, ec);
			spdlog::error("could not save episode: {}", e.what());
			out.push_back(encode_error(fmt::format("save failed: {}", e.what())));
		}
	}
	++decided_;
	out.push_back(encode(end));
	return out;
}

std::vector<std::string> BridgeSession::control(ControlCommand cmd)
{
	std::vector<std::string> out;
	if (!started_)
	{
		out.push_back(begin_episode());
		return out;
	}
	if (phase_ == Phase::running)
	{
		if (cmd == ControlCommand::save)
		{
			out.push_back(encode_error("save is only valid after the episode ends"));
			return out;
		}
		// reset or discard abandons the episode in progress
		EpisodeEndMessage end{episodic_reward_, transitions_.size(), "aborted", std::nullopt};
		out.push_back(encode(end));
		out.push_back(begin_episode());
		return out;
	}
	out = finish(cmd == ControlCommand::save, {});
	out.push_back(begin_episode());
	return out;
}

void BridgeSession::abandon()
{
	if (started_ && !transitions_.empty())
	{
		spdlog::info("client left; discarding episode after {} steps", transitions_.size());
	}
	started_ = false;
	transitions_.clear();
	phase_ = Phase::running;
}

// ---------------------------------------------------------------------------------------
// Transport

namespace {

class Connection;

struct Hooks {
	virtual ~Hooks() = default;
	virtual void on_open(const std::shared_ptr<Connection>& c) = 0;
	virtual void on_text(const std::shared_ptr<Connection>& c, std::string text) = 0;
	virtual void on_closed(const std::shared_ptr<Connection>& c) = 0;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
	Connection(tcp::socket socket, Hooks& hooks)
		: ws_(std::move(socket))
		, hooks_(hooks)
	{
	}

	void start()
	{
		ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
		ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
			if (ec)
			{
				spdlog::warn("websocket handshake failed: {}", ec.message());
				return;
			}
			self->open_ = true;
			self->hooks_.on_open(self);
			self->read_next();
		});
	}

	/// Safe from any thread.
	void send(std::string text)
	{
		net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
			if (!self->open_ || self->closing_)
			{
				return;
			}
			self->queue_.push_back(std::move(text));
			if (self->queue_.size() == 1)
			{
				self->write_next();
			}
		});
	}

	/// Closes once queued messages are flushed. Safe from any thread.
	void close()
	{
		net::post(ws_.get_executor(), [self = shared_from_this()] {
			if (!self->open_ || self->closing_)
			{
				return;
			}
			self->closing_ = true;
			if (self->queue_.empty())
			{
				self->do_close();
			}
		});
	}

	bool open() const { return open_; }

private:
	void read_next()
	{
		ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
			if (ec)
			{
				self->closed();
				return;
			}
			std::string text = beast::buffers_to_string(self->buffer_.data());
			self->buffer_.consume(self->buffer_.size());
			self->hooks_.on_text(self, std::move(text));
			self->read_next();
		});
	}

	void write_next()
	{
		ws_.text(true);
		ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
			if (ec)
			{
				self->closed();
				return;
			}
			self->queue_.pop_front();
			if (!self->queue_.empty())
			{
				self->write_next();
			}
			else if (self->closing_)
			{
				self->do_close();
			}
		});
	}

	void do_close()
	{
		ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) { self->closed(); });
	}

	void closed()
	{
		if (notified_closed_)
		{
			return;
		}
		notified_closed_ = true;
		open_ = false;
		hooks_.on_closed(shared_from_this());
	}

	websocket::stream<beast::tcp_stream> ws_;
	Hooks& hooks_;
	beast::flat_buffer buffer_;
	std::deque<std::string> queue_;
	std::atomic<bool> open_{false};
	bool closing_ = false;
	bool notified_closed_ = false;
};

} // namespace

struct DemoBridgeServer::Impl : Hooks {
	struct Event {
		enum class Kind { opened, control, closed } kind;
		std::shared_ptr<Connection> connection;
		ControlCommand cmd = ControlCommand::reset;
	};

	Impl(env::EnvConfig config, BridgeOptions opts)
		: options(std::move(opts))
		, session(std::move(config), options.out_dir)
		, acceptor(ioc)
	{
		beast::error_code ec;
		const tcp::endpoint endpoint(net::ip::make_address(options.address, ec), options.port);
		if (ec)
		{
			throw ConfigError(fmt::format("bad bridge address '{}': {}", options.address, ec.message()));
		}
		acceptor.open(endpoint.protocol(), ec);
		if (!ec)
		{
			acceptor.set_option(net::socket_base::reuse_address(true), ec);
		}
		if (!ec)
		{
			acceptor.bind(endpoint, ec);
		}
		if (!ec)
		{
			acceptor.listen(net::socket_base::max_listen_connections, ec);
		}
		if (ec)
		{
			throw RuntimeFailure(fmt::format("cannot listen on {}:{}: {}", options.address, options.port, ec.message()));
		}
		bound_port = acceptor.local_endpoint().port();
	}

	void accept_next()
	{
		acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
			if (ec)
			{
				return; // acceptor closed
			}
			std::make_shared<Connection>(std::move(socket), *this)->start();
			accept_next();
		});
	}

	// Hooks run on the network thread.
	void on_open(const std::shared_ptr<Connection>& c) override
	{
		{
			std::lock_guard lock(mutex);
			if (active_network)
			{
				spdlog::warn("rejecting second client; one session at a time");
				c->send(encode_error("another client is already connected"));
				c->close();
				return;
			}
			active_network = c;
		}
		mailbox.reset();
		push({Event::Kind::opened, c});
	}

	void on_text(const std::shared_ptr<Connection>& c, std::string text) override
	{
		{
			std::lock_guard lock(mutex);
			if (c != active_network)
			{
				return;
			}
		}
		try
		{
			const auto msg = decode_client(text);
			if (const auto* a = std::get_if<ActionMessage>(&msg))
			{
				if (!mailbox.offer(*a))
				{
					spdlog::debug("dropping stale action seq {}", a->seq);
				}
			}
			else
			{
				push({Event::Kind::control, c, std::get<ControlMessage>(msg).cmd});
			}
		}
		catch (const ConfigError& e)
		{
			c->send(encode_error(e.what()));
		}
	}

	void on_closed(const std::shared_ptr<Connection>& c) override
	{
		{
			std::lock_guard lock(mutex);
			if (c != active_network)
			{
				return;
			}
			active_network.reset();
		}
		push({Event::Kind::closed, c});
	}

	void push(Event e)
	{
		{
			std::lock_guard lock(mutex);
			events.push_back(std::move(e));
		}
		wake.notify_all();
	}

	std::vector<std::filesystem::path> run()
	{
		auto guard = net::make_work_guard(ioc);
		accept_next();
		std::thread network([this] { ioc.run(); });
		spdlog::info("demo bridge listening on ws://{}:{}", options.address, bound_port);

		std::shared_ptr<Connection> client;
		const auto pacing = std::chrono::milliseconds(options.pacing_ms);
		auto next_tick = std::chrono::steady_clock::now();
		while (!stopping)
		{
			std::deque<Event> pending;
			{
				std::unique_lock lock(mutex);
				const bool idle = !client || session.phase() != BridgeSession::Phase::running;
				if (idle)
				{
					wake.wait_for(lock, std::chrono::milliseconds(20), [this] { return !events.empty() || stopping.load(); });
				}
				pending.swap(events);
			}
			for (auto& e : pending)
			{
				switch (e.kind)
				{
				case Event::Kind::opened:
					client = e.connection;
					client->send(session.begin_episode());
					next_tick = std::chrono::steady_clock::now() + pacing;
					break;
				case Event::Kind::closed:
					if (client == e.connection)
					{
						session.abandon();
						client.reset();
					}
					break;
				case Event::Kind::control:
					if (client == e.connection)
					{
						const auto before = session.decided_episodes();
						for (auto& m : session.control(e.cmd))
						{
							client->send(std::move(m));
						}
						mailbox.clear_action();
						next_tick = std::chrono::steady_clock::now() + pacing;
						if (options.max_episodes > 0 && session.decided_episodes() > before &&
							session.decided_episodes() >= options.max_episodes)
						{
							stopping = true;
						}
					}
					break;
				}
			}
			if (stopping || !client || session.phase() != BridgeSession::Phase::running)
			{
				continue;
			}
			if (options.pacing_ms > 0)
			{
				std::this_thread::sleep_until(next_tick);
				next_tick += pacing;
			}
			client->send(session.tick(mailbox.current()));
		}

		if (client)
		{
			client->close();
		}
		net::post(ioc, [this] {
			beast::error_code ec;
			acceptor.close(ec);
		});
		guard.reset();
		// Give the close handshake a moment, then force the loop down.
		const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
		while (client && client->open() && std::chrono::steady_clock::now() < deadline)
		{
			std::this_thread::sleep_for(std::chrono::milliseconds(5));
		}
		ioc.stop();
		network.join();
		return session.saved_paths();
	}

	BridgeOptions options;
	BridgeSession session;
	net::io_context ioc;
	tcp::acceptor acceptor;
	unsigned short bound_port = 0;
	ActionMailbox mailbox;

	std::mutex mutex;
	std::condition_variable wake;
	std::deque<Event> events;
	std::shared_ptr<Connection> active_network;
	std::atomic<bool> stopping{false};
};

DemoBridgeServer::DemoBridgeServer(env::EnvConfig config, BridgeOptions options)
	: impl_(std::make_unique<Impl>(std::move(config), std::move(options)))
{
	if (impl_->options.pacing_ms < 0)
	{
		throw ConfigError("bridge pacing must be >= 0 ms");
	}
}

DemoBridgeServer::~DemoBridgeServer() = default;

unsigned short DemoBridgeServer::port() const
{
	return impl_->bound_port;
}

std::vector<std::filesystem::path> DemoBridgeServer::run()
{
	return impl_->run();
}

void DemoBridgeServer::stop()
{
	impl_->stopping = true;
	impl_->wake.notify_all();
}

} // namespace sacfd::demos
