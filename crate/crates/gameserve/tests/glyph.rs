use gameserve::glyph::*;
use refgame::world::AttributeSchema;
use refgame::world::ShapeLibrary;

#[test]
fn glyphs_follow_attributes() {
    let schema = AttributeSchema::default();
    let lib = ShapeLibrary::generate(schema.clone(), 64, 1).unwrap();
    for s in lib.shapes() {
        let g = glyph(&schema, s);
        assert_eq!(g.rotation_deg, 90.0 * s.attributes[1] as f64);
        assert_eq!(g.decoration, schema.families()[2].labels[s.attributes[2]]);
        assert!(g.outline.len() >= 3);
        assert!(g.outline.iter().all(|p| p[0].abs() <= 1.0 && p[1].abs() <= 1.0));
        assert_eq!(g, glyph(&schema, s));
    }
}
