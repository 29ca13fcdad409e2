//! Access-by-access fidelity against hand-traced runs of the listings at N = 1.
//!
//! Every register starts at its zero value (`a` or 0), scripts are "ab".

use linkstab::config::{Configuration, System};
use linkstab::model::{Bit, RegisterKind, Value};
use linkstab::protocol::{Action, ProtocolKind};
use linkstab::scheduler::{run, SchedulerPolicy};
use linkstab::topology::Topology;

use Action::{Read as R, Write as W};
use RegisterKind::{CheckControl as CC, Control as Ctl, Read as Rd, Write as Wr};

/// (process, action, kind, owner, value) where value is 'a', 'b', '0' or '1'.
type Access = (usize, Action, RegisterKind, usize, char);

fn render(v: Value) -> char {
    match v {
        Value::Message(s) => (b'a' + s.0) as char,
        Value::Bit(Bit(b)) => if b { '1' } else { '0' },
    }
}

fn accesses(kind: ProtocolKind, schedule: Vec<usize>) -> Vec<Access> {
    let sys = System::builder(kind, Topology::ring(2).unwrap()).script("ab").build().unwrap();
    let len = schedule.len();
    let trace = run(&Configuration::canonical(&sys), &mut SchedulerPolicy::scripted(schedule), len).unwrap();
    trace
        .events
        .iter()
        .map(|e| {
            assert_eq!(e.register.peer, 1 - e.register.owner);
            (e.process, e.action, e.register.kind, e.register.owner, render(e.value))
        })
        .collect()
}

#[test]
fn read_checking_alone() {
    let expected: Vec<Access> = vec![
        (0, W, Wr, 0, 'a'), // write(Write_AB, get)
        (0, R, Wr, 1, 'a'), // r <- Write_BA
        (0, W, Rd, 0, 'a'), // write(Read_AB, r)
        (0, R, Rd, 1, 'a'), // val <- Read_BA
        (0, R, Wr, 0, 'a'), // s <- Write_AB; val = s, leave the loop
        (0, W, Wr, 0, 'b'),
        (0, R, Wr, 1, 'a'),
        (0, W, Rd, 0, 'a'),
        (0, R, Rd, 1, 'a'),
        (0, R, Wr, 0, 'b'), // val != s: stuck until B echoes b
        (0, R, Wr, 1, 'a'),
        (0, W, Rd, 0, 'a'),
    ];
    assert_eq!(accesses(ProtocolKind::Basic2P, vec![0; 12]), expected);
    assert_eq!(accesses(ProtocolKind::ReadChecking, vec![0; 12]), expected);
}

#[test]
fn read_checking_echo_releases_writer() {
    let mut schedule = vec![0; 10];
    schedule.extend([1; 5]);
    schedule.extend([0; 5]);
    let got = accesses(ProtocolKind::Basic2P, schedule);
    assert_eq!(
        got[10..],
        [
            (1, W, Wr, 1, 'a'),
            (1, R, Wr, 0, 'b'), // B reads A's b
            (1, W, Rd, 1, 'b'), // and echoes it
            (1, R, Rd, 0, 'a'),
            (1, R, Wr, 1, 'a'), // B's own test passes: leave
            (0, R, Wr, 1, 'a'),
            (0, W, Rd, 0, 'a'),
            (0, R, Rd, 1, 'b'), // A now sees its b echoed
            (0, R, Wr, 0, 'b'),
            (0, W, Wr, 0, 'a'), // script wraps around
        ]
    );
}

#[test]
fn weak_rendezvous_alone() {
    let expected: Vec<Access> = vec![
        (0, W, Wr, 0, 'a'),  // write(Write_AB, get)
        (0, R, Ctl, 0, '0'), // c <- Control_AB
        (0, W, Ctl, 0, '1'), // write(Control_AB, c + 1 mod 2)
        (0, R, Wr, 1, 'a'),  // r <- Write_BA
        (0, R, Ctl, 1, '0'), // b <- Control_BA
        (0, W, CC, 0, '0'),  // write(CheckControl_AB, b)
        (0, R, Ctl, 0, '1'), // c <- Control_AB
        (0, R, CC, 1, '0'),  // l <- CheckControl_BA; c != l, repeat
        (0, R, Wr, 1, 'a'),
    ];
    assert_eq!(accesses(ProtocolKind::WeakRendezvous, vec![0; 9]), expected);
}

#[test]
fn quasi_rendezvous_skips_when_bits_agree() {
    let expected: Vec<Access> = vec![
        (0, W, Wr, 0, 'a'),
        (0, R, Ctl, 0, '0'),
        (0, W, Ctl, 0, '1'),
        (0, R, Ctl, 1, '0'), // b <- Control_BA
        (0, R, CC, 0, '0'),  // d <- CheckControl_AB; b = d, skip the update
        (0, R, Ctl, 0, '1'), // c <- Control_AB
        (0, R, CC, 1, '0'),  // l <- CheckControl_BA
        (0, R, Ctl, 1, '0'),
    ];
    assert_eq!(accesses(ProtocolKind::QuasiRendezvous, vec![0; 8]), expected);
}

#[test]
fn quasi_rendezvous_reads_once_when_bits_differ() {
    let mut schedule = vec![0; 3];
    schedule.extend([1; 12]);
    let got = accesses(ProtocolKind::QuasiRendezvous, schedule);
    assert_eq!(
        got[3..],
        [
            (1, W, Wr, 1, 'a'),
            (1, R, Ctl, 1, '0'),
            (1, W, Ctl, 1, '1'),
            (1, R, Ctl, 0, '1'), // b <- Control_AB, flipped by A
            (1, R, CC, 1, '0'),  // d <- CheckControl_BA
            (1, R, Wr, 0, 'a'),  // b != d: read A's value
            (1, W, CC, 1, '1'),  // and acknowledge the bit
            (1, R, Ctl, 1, '1'),
            (1, R, CC, 0, '0'),  // c != l: repeat
            (1, R, Ctl, 0, '1'),
            (1, R, CC, 1, '1'),  // now b = d: skip
            (1, R, Ctl, 1, '1'),
        ]
    );
}
