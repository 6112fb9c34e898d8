//! Computes the all-pairs segment distance matrix for a small hand-built
//! network and prints it. The distance between two segments is the shortest
//! network path between their closest endpoints plus half of each segment
//! length, so adjacent segments are half their combined length apart.

use trajclus::road_network::{all_pairs_segment_distances, Node, RoadEdge, RoadNetwork};

fn main() -> trajclus::Result<()> {
    // A 2x3 block: four nodes on top, four below, vertical links.
    //   0 -- 1 -- 2 -- 3
    //   |    |    |    |
    //   4 -- 5 -- 6 -- 7
    let nodes: Vec<Node> = (0..8)
        .map(|i| Node {
            id: i,
            lat: if i < 4 { 0.01 } else { 0.0 },
            lon: 0.01 * f64::from(i % 4),
        })
        .collect();
    let pairs = [
        (0u32, 1u32),
        (1, 2),
        (2, 3),
        (4, 5),
        (5, 6),
        (6, 7),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ];
    let edges: Vec<RoadEdge> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| RoadEdge {
            id: i as u32,
            a,
            b,
            length_km: None,
        })
        .collect();
    let net = RoadNetwork::new(nodes, edges)?;
    let d_all = all_pairs_segment_distances(&net)?;

    println!("segment lengths:");
    for e in 0..net.num_edges() as u32 {
        let edge = net.edge(e);
        println!(
            "  {}: {} -> {}  {:.3} km",
            e,
            edge.a,
            edge.b,
            net.edge_length_km(e)
        );
    }
    println!("\ndistance matrix (km):");
    print!("     ");
    for j in 0..net.num_edges() as u32 {
        print!("{j:>7}");
    }
    println!();
    for i in 0..net.num_edges() as u32 {
        print!("  {i:>2} ");
        for j in 0..net.num_edges() as u32 {
            print!("{:>7.3}", d_all.get(i, j));
        }
        println!();
    }
    Ok(())
}
