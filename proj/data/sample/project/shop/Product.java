package shop;

public class Product {
    private final String sku;
    private final String title;
    private long priceCents;

    public Product(String sku, String title, long priceCents) {
        this.sku = sku;
        this.title = title;
        this.priceCents = priceCents;
    }

    public long getPriceCents() {
        return priceCents;
    }

    public String getTitle() {
        return title;
    }
}
