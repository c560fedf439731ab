use holostab_core::rank::{bareiss_rank, float_rank};
use holostab_core::rng::SplitMix64;
use holostab_testkit as testkit;

fn main() {
    let mut rng = SplitMix64::new(7);
    for trial in 0..20 {
        let n = 4 + rng.next_below(12) as usize;
        let c = testkit::random_complex(&mut rng, n, 0.4);
        for order in [1u8, 2u8] {
            let b = c.boundary_matrix(order);
            let entries: Vec<(usize, usize, i64)> =
                b.entries().iter().map(|&(r, col, s)| (r, col, s as i64)).collect();
            let exact = bareiss_rank(&entries, b.nrows, b.ncols).unwrap();
            let fl = float_rank(&entries, b.nrows, b.ncols);
            if exact != fl {
                println!("trial {trial} order {order}: nrows {} ncols {} exact {exact} float {fl}", b.nrows, b.ncols);
            }
        }
    }
}
