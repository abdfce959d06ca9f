package shop;

public class LineItem {
    private final Product product;
    private int quantity;

    public LineItem(Product product, int quantity) {
        this.product = product;
        this.quantity = quantity;
    }

    public long totalCents() {
        return product.getPriceCents() * quantity;
    }

    public void increase(int amount) {
        quantity += amount;
    }
}
