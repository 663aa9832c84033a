//! Reliable FIFO channels between every pair of nodes.

use std::io::{self, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use super::{MpcError, NodeId};

/// How long a node waits for a peer before declaring the transport failed.
pub const RECV_TIMEOUT: Duration = Duration::from_secs(120);

pub trait Transport: Send {
    fn id(&self) -> NodeId;
    fn nodes(&self) -> usize;
    fn send(&mut self, to: NodeId, bytes: Vec<u8>) -> Result<(), MpcError>;
    fn recv(&mut self, from: NodeId) -> Result<Vec<u8>, MpcError>;
}

fn failure(msg: impl Into<String>) -> MpcError {
    MpcError::TransportFailure(msg.into())
}

/// In-process endpoint backed by one queue per ordered node pair.
pub struct ChannelEndpoint {
    id: NodeId,
    senders: Vec<Option<Sender<Vec<u8>>>>,
    receivers: Vec<Option<Receiver<Vec<u8>>>>,
}

/// Builds a full mesh of in-process channels for `n` nodes.
pub fn channel_mesh(n: usize) -> Vec<ChannelEndpoint> {
    let mut eps: Vec<ChannelEndpoint> = (0..n)
        .map(|id| ChannelEndpoint {
            id,
            senders: (0..n).map(|_| None).collect(),
            receivers: (0..n).map(|_| None).collect(),
        })
        .collect();
    for from in 0..n {
        for to in 0..n {
            if from != to {
                let (tx, rx) = mpsc::channel();
                eps[from].senders[to] = Some(tx);
                eps[to].receivers[from] = Some(rx);
            }
        }
    }
    eps
}

impl Transport for ChannelEndpoint {
    fn id(&self) -> NodeId {
        self.id
    }

    fn nodes(&self) -> usize {
        self.senders.len()
    }

    fn send(&mut self, to: NodeId, bytes: Vec<u8>) -> Result<(), MpcError> {
        let tx = self
            .senders
            .get(to)
            .and_then(Option::as_ref)
            .ok_or_else(|| failure(format!("no channel {} -> {to}", self.id)))?;
        tx.send(bytes)
            .map_err(|_| failure(format!("node {to} hung up")))
    }

    fn recv(&mut self, from: NodeId) -> Result<Vec<u8>, MpcError> {
        let rx = self
            .receivers
            .get(from)
            .and_then(Option::as_ref)
            .ok_or_else(|| failure(format!("no channel {from} -> {}", self.id)))?;
        rx.recv_timeout(RECV_TIMEOUT).map_err(|e| match e {
            RecvTimeoutError::Timeout => failure(format!("timed out waiting for node {from}")),
            RecvTimeoutError::Disconnected => failure(format!("node {from} hung up")),
        })
    }
}

/// Endpoint over loopback TCP with length-prefixed frames. Writes go through a
/// per-peer writer thread so that simultaneous large sends cannot deadlock.
pub struct TcpEndpoint {
    id: NodeId,
    writers: Vec<Option<Sender<Vec<u8>>>>,
    readers: Vec<Option<BufReader<TcpStream>>>,
}

fn spawn_writer(mut stream: TcpStream) -> Sender<Vec<u8>> {
    let (tx, rx) = mpsc::channel::<Vec<u8>>();
    thread::spawn(move || {
        for msg in rx {
            let len = (msg.len() as u32).to_le_bytes();
            if stream.write_all(&len).and_then(|_| stream.write_all(&msg)).is_err() {
                break;
            }
        }
        let _ = stream.flush();
    });
    tx
}

/// Connects `n` nodes over 127.0.0.1 using ephemeral ports.
pub fn tcp_localhost_mesh(n: usize) -> io::Result<Vec<TcpEndpoint>> {
    let listeners: Vec<TcpListener> = (0..n)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<io::Result<_>>()?;
    let mut eps: Vec<TcpEndpoint> = (0..n)
        .map(|id| TcpEndpoint {
            id,
            writers: (0..n).map(|_| None).collect(),
            readers: (0..n).map(|_| None).collect(),
        })
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            let a = TcpStream::connect(listeners[j].local_addr()?)?;
            let (b, _) = listeners[j].accept()?;
            for s in [&a, &b] {
                s.set_nodelay(true)?;
                s.set_read_timeout(Some(RECV_TIMEOUT))?;
            }
            eps[i].readers[j] = Some(BufReader::new(a.try_clone()?));
            eps[i].writers[j] = Some(spawn_writer(a));
            eps[j].readers[i] = Some(BufReader::new(b.try_clone()?));
            eps[j].writers[i] = Some(spawn_writer(b));
        }
    }
    Ok(eps)
}

impl Transport for TcpEndpoint {
    fn id(&self) -> NodeId {
        self.id
    }

    fn nodes(&self) -> usize {
        self.writers.len()
    }

    fn send(&mut self, to: NodeId, bytes: Vec<u8>) -> Result<(), MpcError> {
        let tx = self
            .writers
            .get(to)
            .and_then(Option::as_ref)
            .ok_or_else(|| failure(format!("no connection {} -> {to}", self.id)))?;
        tx.send(bytes).map_err(|_| failure(format!("connection to {to} closed")))
    }

    fn recv(&mut self, from: NodeId) -> Result<Vec<u8>, MpcError> {
        let r = self
            .readers
            .get_mut(from)
            .and_then(Option::as_mut)
            .ok_or_else(|| failure(format!("no connection {from} -> {}", self.id)))?;
        let mut len = [0u8; 4];
        r.read_exact(&mut len)
            .map_err(|e| failure(format!("read from {from}: {e}")))?;
        let mut buf = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut buf)
            .map_err(|e| failure(format!("read from {from}: {e}")))?;
        Ok(buf)
    }
}
