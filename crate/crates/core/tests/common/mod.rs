//! Fixtures shared by the integration tests: a mixed-type instruction set and
//! state layout, random valid graphs, and a naive reference interpreter that
//! shares no code with the library's execution path.

#![allow(dead_code)]

use std::sync::Arc;

use tpg::data::{NativeData, NativeShape, SourceLayout, StateSource};
use tpg::evolution::random_program;
use tpg::graph::{TeamId, TpgGraph, Vertex};
use tpg::instructions::{build_iset_complex, build_iset_simple, Instruction, InstructionSet, InstructionSetRegistry};
use tpg::parallel::Rng;
use tpg::program::{Program, ProgramContext};

pub const REGISTERS: usize = 8;

/// Raw contents of one environment source, kept apart from the library types.
#[derive(Clone, Debug)]
pub enum Raw {
    F64(Vec<f64>),
    I64(Vec<i64>),
    I8(Vec<i8>),
}

/// An environment state: raw data plus the grid width (`None` for flat sources).
#[derive(Clone, Debug)]
pub struct RawSource {
    pub data: Raw,
    pub grid: Option<(usize, usize)>,
}

impl RawSource {
    fn len(&self) -> usize {
        match &self.data {
            Raw::F64(v) => v.len(),
            Raw::I64(v) => v.len(),
            Raw::I8(v) => v.len(),
        }
    }

    pub fn to_state(&self) -> StateSource {
        let shape = match self.grid {
            Some((h, w)) => NativeShape::Grid(h, w),
            None => NativeShape::Flat(self.len()),
        };
        let data = match &self.data {
            Raw::F64(v) => NativeData::F64(v.clone()),
            Raw::I64(v) => NativeData::I64(v.clone()),
            Raw::I8(v) => NativeData::I8(v.clone()),
        };
        StateSource::new(shape, data).unwrap()
    }
}

fn typed_extras() -> Vec<Instruction> {
    vec![
        Instruction::lambda1("sum3", |v: [f64; 3]| v[0] + v[1] + v[2]),
        Instruction::lambda2("addi", |a: i64, b: i64| a.wrapping_add(b) as f64),
        Instruction::lambda2("muli8", |a: i8, b: i8| f64::from(a) * f64::from(b)),
        Instruction::lambda1("trace2", |m: [[i8; 2]; 2]| f64::from(m[0][0]) + f64::from(m[1][1])),
        Instruction::lambda2("diffmix", |a: [i64; 2], x: f64| a[0].wrapping_sub(a[1]) as f64 * x),
        Instruction::lambda1("det2", |m: [[f64; 2]; 2]| m[0][0] * m[1][1] - m[0][1] * m[1][0]),
    ]
}

/// The simple set followed by instructions over integer, vector and matrix operands.
pub fn typed_simple() -> InstructionSet {
    let mut all: Vec<Instruction> = build_iset_simple().iter().cloned().collect();
    all.extend(typed_extras());
    InstructionSet::new("typed-simple", all).unwrap()
}

/// The complex set followed by the same typed instructions.
pub fn typed_complex() -> InstructionSet {
    let mut all: Vec<Instruction> = build_iset_complex().iter().cloned().collect();
    all.extend(typed_extras());
    InstructionSet::new("typed-complex", all).unwrap()
}

pub fn typed_registry() -> InstructionSetRegistry {
    let mut registry = InstructionSetRegistry::default();
    registry.register("typed-simple", typed_simple);
    registry.register("typed-complex", typed_complex);
    registry
}

/// f64 flat(5), i64 flat(4), i8 grid 3x4, f64 grid 2x3.
pub fn random_state(rng: &mut Rng) -> Vec<RawSource> {
    let float = |rng: &mut Rng| match rng.below(20) {
        0 => 0.0,
        1 => f64::NAN,
        2 => [f64::INFINITY, f64::NEG_INFINITY][rng.below(2)],
        3 => -0.0,
        _ => rng.uniform(-10.0, 10.0),
    };
    let int = |rng: &mut Rng| match rng.below(10) {
        0 => rng.next_u64() as i64,
        _ => rng.below(2001) as i64 - 1000,
    };
    vec![
        RawSource {
            data: Raw::F64((0..5).map(|_| float(rng)).collect()),
            grid: None,
        },
        RawSource {
            data: Raw::I64((0..4).map(|_| int(rng)).collect()),
            grid: None,
        },
        RawSource {
            data: Raw::I8((0..12).map(|_| rng.next_u64() as i8).collect()),
            grid: Some((3, 4)),
        },
        RawSource {
            data: Raw::F64((0..6).map(|_| float(rng)).collect()),
            grid: Some((2, 3)),
        },
    ]
}

pub fn to_snapshot(raw: &[RawSource]) -> Vec<StateSource> {
    raw.iter().map(RawSource::to_state).collect()
}

pub fn typed_context(set: InstructionSet) -> Arc<ProgramContext> {
    let layout = SourceLayout::of(REGISTERS, &to_snapshot(&random_state(&mut Rng::new(0))));
    Arc::new(ProgramContext::new(Arc::new(set), layout).unwrap())
}

/// A random valid graph: team 0 is a root, every team's first edge goes to an
/// action, other edges go to an action or to any team except itself and 0.
/// Cycles between teams are allowed.
pub fn random_graph(ctx: &Arc<ProgramContext>, actions: usize, rng: &mut Rng) -> TpgGraph {
    let mut graph = TpgGraph::new(ctx.clone(), actions);
    let teams: Vec<TeamId> = (0..rng.range_inclusive(1, 12)).map(|_| graph.add_team()).collect();
    for &team in &teams {
        let edges = rng.range_inclusive(2, 6);
        for i in 0..edges {
            let targets: Vec<TeamId> = teams[1..].iter().copied().filter(|t| *t != team).collect();
            let destination = if i == 0 || targets.is_empty() || rng.chance(0.4) {
                Vertex::Action(rng.below(actions))
            } else {
                Vertex::Team(*rng.pick(&targets).unwrap())
            };
            graph.add_edge(team, destination, random_program(ctx, 12, rng)).unwrap();
        }
    }
    graph
}

/// Reference value of an operand: every element widened to a common carrier.
#[derive(Clone, Debug)]
enum Operand {
    F(Vec<f64>),
    I(Vec<i64>),
    B(Vec<i8>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    F,
    I,
    B,
}

#[derive(Clone, Copy, Debug)]
enum Form {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

fn signature(name: &str) -> Vec<(Kind, Form)> {
    use Form::*;
    use Kind::*;
    match name {
        "add" | "sub" | "mul" | "div" | "cond" => vec![(F, Scalar), (F, Scalar)],
        "cos" | "ln" | "exp" => vec![(F, Scalar)],
        "sum3" => vec![(F, Vector(3))],
        "addi" => vec![(I, Scalar), (I, Scalar)],
        "muli8" => vec![(B, Scalar), (B, Scalar)],
        "trace2" => vec![(B, Matrix(2, 2))],
        "diffmix" => vec![(I, Vector(2)), (F, Scalar)],
        "det2" => vec![(F, Matrix(2, 2))],
        other => panic!("oracle does not know `{other}`"),
    }
}

fn apply(name: &str, ops: &[Operand]) -> f64 {
    let f = |i: usize| match &ops[i] {
        Operand::F(v) => v.clone(),
        other => panic!("expected floats, got {other:?}"),
    };
    let int = |i: usize| match &ops[i] {
        Operand::I(v) => v.clone(),
        other => panic!("expected i64, got {other:?}"),
    };
    let byte = |i: usize| match &ops[i] {
        Operand::B(v) => v.clone(),
        other => panic!("expected i8, got {other:?}"),
    };
    match name {
        "add" => f(0)[0] + f(1)[0],
        "sub" => f(0)[0] - f(1)[0],
        "mul" => f(0)[0] * f(1)[0],
        "div" => f(0)[0] / f(1)[0],
        "cond" => {
            let (a, b) = (f(0)[0], f(1)[0]);
            if a < b {
                -a
            } else {
                a
            }
        }
        "cos" => f(0)[0].cos(),
        "ln" => f(0)[0].ln(),
        "exp" => f(0)[0].exp(),
        "sum3" => {
            let v = f(0);
            v[0] + v[1] + v[2]
        }
        "addi" => int(0)[0].wrapping_add(int(1)[0]) as f64,
        "muli8" => byte(0)[0] as f64 * byte(1)[0] as f64,
        "trace2" => {
            let m = byte(0);
            m[0] as f64 + m[3] as f64
        }
        "diffmix" => {
            let a = int(0);
            a[0].wrapping_sub(a[1]) as f64 * f(1)[0]
        }
        "det2" => {
            let m = f(0);
            m[0] * m[3] - m[1] * m[2]
        }
        other => panic!("oracle does not know `{other}`"),
    }
}

/// Element indices covered by an operand at `location`, or `None` when the
/// location is out of range.
fn window(len: usize, grid: Option<(usize, usize)>, form: Form, location: usize) -> Option<Vec<usize>> {
    match form {
        Form::Scalar => (location < len).then(|| vec![location]),
        Form::Vector(n) => (n <= len && location <= len - n).then(|| (location..location + n).collect()),
        Form::Matrix(h, w) => {
            let (rows, cols) = grid?;
            if h > rows || w > cols {
                return None;
            }
            let per_row = cols - w + 1;
            if location >= per_row * (rows - h + 1) {
                return None;
            }
            let (r, c) = (location / per_row, location % per_row);
            Some((0..h).flat_map(|i| (0..w).map(move |j| (r + i) * cols + c + j)).collect())
        }
    }
}

fn fetch(registers: &[f64], env: &[RawSource], source: usize, location: usize, kind: Kind, form: Form) -> Operand {
    let (data, grid) = if source == 0 {
        (Raw::F64(registers.to_vec()), None)
    } else {
        let s = &env[source - 1];
        (s.data.clone(), s.grid)
    };
    let len = match &data {
        Raw::F64(v) => v.len(),
        Raw::I64(v) => v.len(),
        Raw::I8(v) => v.len(),
    };
    let idx = window(len, grid, form, location).expect("program was generated valid");
    match (kind, &data) {
        (Kind::F, Raw::F64(v)) => Operand::F(idx.iter().map(|&i| v[i]).collect()),
        (Kind::F, Raw::I64(v)) => Operand::F(idx.iter().map(|&i| v[i] as f64).collect()),
        (Kind::F, Raw::I8(v)) => Operand::F(idx.iter().map(|&i| v[i] as f64).collect()),
        (Kind::I, Raw::I64(v)) => Operand::I(idx.iter().map(|&i| v[i]).collect()),
        (Kind::I, Raw::I8(v)) => Operand::I(idx.iter().map(|&i| v[i] as i64).collect()),
        (Kind::B, Raw::I8(v)) => Operand::B(idx.iter().map(|&i| v[i]).collect()),
        (k, _) => panic!("source {source} cannot serve {k:?}"),
    }
}

/// Straightforward re-implementation of program execution.
pub fn naive_execute(set: &InstructionSet, program: &Program, env: &[RawSource]) -> f64 {
    let mut registers = [0.0f64; REGISTERS];
    for line in program.lines() {
        let name = set.get(line.instruction).unwrap().name();
        let ops: Vec<Operand> = signature(name)
            .into_iter()
            .zip(&line.operands)
            .map(|((kind, form), a)| fetch(&registers, env, a.source, a.location, kind, form))
            .collect();
        registers[line.destination] = apply(name, &ops);
    }
    registers[0]
}
