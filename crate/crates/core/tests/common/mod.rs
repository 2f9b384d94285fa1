#![allow(dead_code)]

use mcflab_core::ambient::Point;
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct TableRow {
    pub kind: String,
    pub point: Point,
    pub index: [usize; 4],
    pub value: f64,
}

/// Curvature of the Eguchi–Hanson chart (a = 1) tabulated offline with
/// `tools/eguchi_hanson_reference.py`.
pub fn eguchi_hanson_table() -> Vec<TableRow> {
    let text = include_str!("../data/eguchi_hanson_reference.csv");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| f[i].parse::<f64>().unwrap();
            let idx = |i: usize| f[i].parse::<usize>().unwrap();
            TableRow {
                kind: f[0].to_string(),
                point: DVector::from_vec(vec![num(1), num(2), num(3), num(4)]),
                index: [idx(5), idx(6), idx(7), idx(8)],
                value: num(9),
            }
        })
        .collect()
}
